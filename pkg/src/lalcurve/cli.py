"""Command-line interface: ``lal <command> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import INF, LalQuery, ceil_fraction, check_alpha, check_beta, lal
from .curves import compare_table, curve_breakpoints
from .io import (
    DataError,
    curve_to_csv,
    format_float,
    ingest,
    read_losses,
    render_svg,
    rows_to_csv,
    table_to_csv,
)
from .losses import LossKind, LossSpec
from .simulate import (
    ENUMERATION_CAP,
    GENERATORS,
    SimConfig,
    coverage_mc,
    enumeration_oracle,
    oracle_exceedance,
    oracle_order_pmf,
    quantile_ratio_mc,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------- arg types


def _batch_size(text: str):
    if text.strip().lower() == "inf":
        return INF
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'inf', got {text!r}")
    if m < 1:
        raise argparse.ArgumentTypeError(f"m must be >= 1, got {m}")
    return m


def _checked(check):
    def parse(text: str) -> float:
        try:
            return check(float(text))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))

    return parse


def _extended(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}")
    if math.isnan(value):
        raise argparse.ArgumentTypeError("NaN is not a valid bound")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _alpha_grid(text: str) -> list:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers in {text!r}")
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    grid = [round(start + i * step, 12) for i in range(count)]
    for a in grid:
        if not 0 < a < 1:
            raise argparse.ArgumentTypeError(f"grid value {a} outside (0, 1)")
    return grid


def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("values must be >= 1")
    return values


def _named_path(text: str):
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, path


# ---------------------------------------------------------------- helpers


def _loss_spec(args):
    if not args.loss:
        if args.loss_params:
            raise UsageError("--loss-params needs --loss")
        return None
    params = {}
    if args.loss_params:
        raw = args.loss_params
        try:
            text = raw if raw.lstrip().startswith("{") else Path(raw).read_text()
            params = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read loss parameters: {exc}") from None
    try:
        return LossSpec(args.loss, mean=params.get("mean"), cov=params.get("cov"))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _load(args, path):
    return ingest(
        path,
        _loss_spec(args),
        fmt=args.input_format,
        support_min=args.support_min,
        support_max=args.support_max,
    )


def _emit(args, text: str):
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise DataError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _note(message: str):
    print(f"note: {message}", file=sys.stderr)


def _m_text(m) -> str:
    return "inf" if m == INF else str(m)


def _ties_note(sample):
    if sample.has_ties:
        _note("calibration losses contain ties; exact_coverage is conservative under ties")


# --------------------------------------------------------------- commands


def cmd_limit(args):
    sample = _load(args, args.input)
    if args.alpha is None:
        raise UsageError("limit needs --alpha")
    out = lal(sample, LalQuery(m=args.m, beta=args.beta, alpha=args.alpha))
    header = "n,m,beta,alpha,ordinal,k_star,limit,exact_coverage,ties\n"
    row = [
        str(out.n),
        _m_text(args.m),
        format_float(args.beta),
        format_float(args.alpha),
        "" if out.ordinal is None else str(out.ordinal),
        str(out.k_star),
        format_float(out.limit),
        format_float(out.exact_coverage),
        str(out.ties).lower(),
    ]
    _ties_note(sample)
    _emit(args, header + ",".join(row) + "\n")


def cmd_curve(args):
    sample = _load(args, args.input)
    curve = curve_breakpoints(sample, args.m, args.beta, name=Path(args.input).stem)
    _ties_note(sample)
    if args.format == "svg":
        _emit(args, render_svg(curve, title=f"m={_m_text(args.m)}, beta={args.beta:g}"))
    elif args.alpha_grid:
        lines = ["alpha,limit,k,exact_coverage"]
        for a in args.alpha_grid:
            k = curve.k_at(a)
            lines.append(
                f"{format_float(a)},{format_float(curve.limits[k - 1])},{k},"
                f"{format_float(1.0 - curve.alphas[k - 1])}"
            )
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, curve_to_csv(curve))


def cmd_compare(args):
    names = [name for name, _ in args.inputs]
    if len(set(names)) != len(names):
        raise UsageError("sample names must be unique")
    if len(names) < 2:
        raise UsageError("compare needs at least two NAME=PATH inputs")
    samples = {name: _load(args, path) for name, path in args.inputs}
    grid = args.alpha_grid or ([args.alpha] if args.alpha is not None else None)
    if args.format == "svg" and grid is None:
        curves = [curve_breakpoints(s, args.m, args.beta, name=k) for k, s in samples.items()]
        _emit(args, render_svg(curves, title=f"m={_m_text(args.m)}, beta={args.beta:g}"))
        return
    if grid is None:
        raise UsageError("compare needs --alpha or --alpha-grid")
    table = compare_table(samples, args.m, args.beta, grid)
    for s in samples.values():
        _ties_note(s)
    if args.format == "svg":
        _emit(args, render_svg(table, title=f"m={_m_text(args.m)}, beta={args.beta:g}"))
    else:
        _emit(args, table_to_csv(table))


def cmd_losses(args):
    spec = _loss_spec(args)
    if spec is None:
        raise UsageError("losses needs --loss")
    batch = read_losses(args.input, spec, fmt=args.input_format)
    if batch.saturated:
        rows = ", ".join(str(i) for i in batch.saturated[:10])
        _note(f"{len(batch.saturated)} record(s) hit the NLL probability floor (record indices {rows})")
    _emit(args, "loss\n" + "".join(format_float(v) + "\n" for v in batch.values))


def _sim_config(args, **extra) -> SimConfig:
    alphas = args.alpha_grid or ([args.alpha] if args.alpha is not None else [0.05, 0.1, 0.2, 0.3])
    if args.m == INF:
        raise UsageError("simulation needs a finite --m")
    return SimConfig(
        generator=args.generator,
        n=args.n,
        m=args.m,
        beta=args.beta,
        alphas=tuple(alphas),
        replicates=args.replicates,
        seed=args.seed,
        mu=args.mu,
        sigma=args.sigma,
        rate=args.rate,
        c=args.c,
        **extra,
    )


def cmd_sim_coverage(args):
    _emit(args, rows_to_csv(coverage_mc(_sim_config(args))))


def cmd_sim_ratio(args):
    if args.m != 1:
        raise UsageError("quantile-ratio needs --m 1")
    _emit(args, rows_to_csv(quantile_ratio_mc(_sim_config(args, n_grid=args.n_grid))))


def cmd_sim_oracle(args):
    n, m = args.n, args.m
    if m == INF:
        raise UsageError("oracle needs a finite --m")
    if n + m > ENUMERATION_CAP:
        raise UsageError(f"oracle is capped at n + m <= {ENUMERATION_CAP}")
    if args.i is not None or args.j is not None:
        if args.i is None or args.j is None:
            raise UsageError("--i and --j go together")
        p = oracle_order_pmf(n, m, args.i, args.j)
        text = f"n,m,i,j,probability,fraction\n{n},{m},{args.i},{args.j},{format_float(float(p))},{p}\n"
    elif args.alpha is not None:
        chk = enumeration_oracle(n, m, args.beta, args.alpha)
        text = (
            "n,m,beta,alpha,k_star,enumerated,exact_a,valid,exact\n"
            f"{n},{m},{format_float(args.beta)},{format_float(args.alpha)},{chk.k_star},"
            f"{chk.enumerated},{chk.exact_a},{str(chk.valid).lower()},{str(chk.exact).lower()}\n"
        )
    elif args.k is not None:
        q = ceil_fraction(m, args.beta)
        p = oracle_exceedance(n, m, q, args.k)
        text = f"n,m,q,k,probability,fraction\n{n},{m},{q},{args.k},{format_float(float(p))},{p}\n"
    else:
        raise UsageError("oracle needs --i/--j, --k or --alpha")
    _emit(args, text)


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lal", description="Distribution-free level-alpha limits on future losses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def query_flags(p, need_alpha=False):
        p.add_argument("--m", type=_batch_size, default=1, help="batch size: integer or 'inf' (default 1)")
        p.add_argument("--beta", type=_checked(check_beta), default=1.0, help="fraction in (0, 1] (default 1)")
        p.add_argument("--alpha", type=_checked(check_alpha), help="level in (0, 1)")
        p.add_argument("--alpha-grid", type=_alpha_grid, help="start:stop:step, inclusive")

    def input_flags(p):
        p.add_argument("--loss", choices=[k.value for k in LossKind], help="loss applied to record columns")
        p.add_argument("--loss-params", help="JSON file or inline object with 'mean' and 'cov' for gaussian_nll")
        p.add_argument("--input-format", choices=["csv", "json"], help="default: by file extension")
        p.add_argument("--support-min", type=_extended, default=-math.inf)
        p.add_argument("--support-max", type=_extended, default=math.inf)

    def output_flags(p, svg=True):
        p.add_argument("--format", choices=["csv", "svg"] if svg else ["csv"], default="csv")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("limit", help="one level-alpha limit")
    p.add_argument("input")
    query_flags(p)
    input_flags(p)
    output_flags(p, svg=False)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("curve", help="exact LAL curve breakpoints for one sample")
    p.add_argument("input")
    query_flags(p)
    input_flags(p)
    output_flags(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("compare", help="limits of several samples on an alpha grid")
    p.add_argument("inputs", nargs="+", type=_named_path, metavar="NAME=PATH")
    query_flags(p)
    input_flags(p)
    output_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("losses", help="apply a loss to prediction records and write a loss CSV")
    p.add_argument("input")
    input_flags(p)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_losses)

    sim = sub.add_parser("simulate", help="verification harnesses")
    simsub = sim.add_subparsers(dest="harness", required=True, parser_class=_Parser)

    def sim_flags(p):
        query_flags(p)
        p.add_argument("--generator", choices=GENERATORS, default="iid_normal_losses")
        p.add_argument("--n", type=int, default=30)
        p.add_argument("--replicates", type=int, default=2000)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--mu", type=float, default=1.0)
        p.add_argument("--sigma", type=float, default=0.5)
        p.add_argument("--rate", type=float, default=3.0)
        p.add_argument("--c", type=float, default=1.0)
        output_flags(p, svg=False)

    p = simsub.add_parser("coverage", help="Monte Carlo miscoverage per alpha")
    sim_flags(p)
    p.set_defaults(func=cmd_sim_coverage)

    p = simsub.add_parser("quantile-ratio", help="E[limit / F^-1(1 - alpha)] over an n grid")
    sim_flags(p)
    p.add_argument("--n-grid", type=_int_list, default=(20, 80, 320))
    p.set_defaults(func=cmd_sim_ratio)

    p = simsub.add_parser("oracle", help="exhaustive partition enumeration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=_batch_size, required=True)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--beta", type=_checked(check_beta), default=1.0)
    p.add_argument("--alpha", type=_checked(check_alpha))
    p.add_argument("--out")
    p.set_defaults(func=cmd_sim_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"lal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"lal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
