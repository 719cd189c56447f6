"""Loss file ingestion and CSV / SVG export.

Input files are CSV with a header row or JSON.  Recognised column sets:

* ``loss``                   -- losses used as-is;
* ``y, y_hat``               -- regression records;
* ``label, p_0 .. p_K``      -- classification records (0-indexed labels);
* ``z_0 .. z_D``             -- density records for ``gaussian_nll``.

JSON input is either a flat array of numbers (losses) or an array of flat
objects using the same column names.  ``inf`` is the text token for infinity
in every output format.
"""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import math
import re
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .curves import CompareTable, LalCurve
from .losses import (
    CLASSIFICATION_KINDS,
    REGRESSION_KINDS,
    ClassificationRecord,
    DensityRecord,
    LossBatch,
    LossKind,
    LossSpec,
    RegressionRecord,
    compute_losses,
)
from .sample import CalibrationSample, build_sample

__all__ = [
    "DataError",
    "curve_to_csv",
    "export",
    "format_float",
    "ingest",
    "read_curve_csv",
    "read_losses",
    "render_svg",
    "rows_to_csv",
    "table_to_csv",
]


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def format_float(x: float) -> str:
    """Shortest round-trippable decimal; infinities as ``inf`` / ``-inf``."""
    return repr(float(x))


# ------------------------------------------------------------------ input


def _parse_number(cell, where: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        raise DataError(f"{where}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite value {cell!r}")
    return value


def _parse_label(cell, where: str) -> int:
    value = _parse_number(cell, where)
    if value != int(value):
        raise DataError(f"{where}: label {cell!r} is not an integer")
    return int(value)


def _indexed(columns: Sequence[str], prefix: str) -> list[str]:
    pat = re.compile(rf"^{prefix}_(\d+)$")
    found = sorted((int(mt.group(1)), c) for c in columns if (mt := pat.match(c)))
    if [i for i, _ in found] != list(range(len(found))):
        raise DataError(f"columns {prefix}_0..{prefix}_K must be contiguous from 0")
    return [c for _, c in found]


def _layout(columns: Sequence[str]) -> str:
    cols = set(columns)
    if "loss" in cols:
        return "loss"
    if {"y", "y_hat"} <= cols:
        return "regression"
    if "label" in cols and _indexed(columns, "p"):
        return "classification"
    if _indexed(columns, "z"):
        return "density"
    raise DataError(
        f"unrecognised columns {sorted(cols)}; expected 'loss', 'y,y_hat', 'label,p_0..' or 'z_0..'"
    )


def _check_spec(layout: str, spec: Optional[LossSpec]):
    if layout == "loss":
        if spec is not None:
            raise DataError("file already holds losses; drop the loss spec")
        return
    if spec is None:
        raise DataError(f"{layout} records need a loss spec")
    ok = {
        "regression": spec.kind in REGRESSION_KINDS,
        "classification": spec.kind in CLASSIFICATION_KINDS,
        "density": spec.kind is LossKind.GAUSSIAN_NLL,
    }[layout]
    if not ok:
        raise DataError(f"loss {spec.kind.value!r} does not apply to {layout} records")


def _record(layout: str, row: dict, columns: Sequence[str], where: str):
    if layout == "regression":
        return RegressionRecord(_parse_number(row["y"], where), _parse_number(row["y_hat"], where))
    if layout == "classification":
        probs = [_parse_number(row[c], where) for c in _indexed(columns, "p")]
        return ClassificationRecord(_parse_label(row["label"], where), probs)
    return DensityRecord([_parse_number(row[c], where) for c in _indexed(columns, "z")])


def _rows_from_csv(text: str):
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty file, header row required") from None
    header = [h.strip() for h in header]
    rows = []
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(record)}")
        rows.append((f"line {line}", dict(zip(header, (c.strip() for c in record)))))
    return header, rows


def _reject_constant(token):
    raise DataError(f"non-finite JSON constant {token}")


def _rows_from_json(text: str):
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, list):
        raise DataError("JSON input must be an array")
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in data):
        return ["loss"], [(f"element {i}", {"loss": v}) for i, v in enumerate(data)]
    if not all(isinstance(v, dict) for v in data):
        raise DataError("JSON array must hold only numbers or only objects")
    header = list(data[0]) if data else []
    rows = []
    for i, obj in enumerate(data):
        if sorted(obj) != sorted(header):
            raise DataError(f"element {i}: keys {sorted(obj)} differ from {sorted(header)}")
        rows.append((f"element {i}", obj))
    return header, rows


def _detect_format(path: Path, fmt: Optional[str]) -> str:
    if fmt:
        return fmt
    return "json" if path.suffix.lower() == ".json" else "csv"


def read_losses(path, spec: Optional[LossSpec] = None, fmt: Optional[str] = None) -> LossBatch:
    """Read ``path`` and return its losses, applying ``spec`` to record rows."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    header, rows = (_rows_from_json if _detect_format(path, fmt) == "json" else _rows_from_csv)(text)
    layout = _layout(header)
    _check_spec(layout, spec)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if layout == "loss":
        return LossBatch(np.array([_parse_number(r["loss"], w) for w, r in rows]))
    values, saturated = [], []
    for idx, (where, row) in enumerate(rows):
        try:
            batch = compute_losses(spec, [_record(layout, row, header, where)])
        except DataError:
            raise
        except (TypeError, ValueError) as exc:
            raise DataError(f"{where}: {exc}") from None
        values.append(batch.values[0])
        if batch.saturated:
            saturated.append(idx)
    return LossBatch(np.asarray(values, dtype=float), saturated)


def ingest(
    path,
    spec: Optional[LossSpec] = None,
    fmt: Optional[str] = None,
    support_min: float = -math.inf,
    support_max: float = math.inf,
) -> CalibrationSample:
    """Read a loss file into a :class:`CalibrationSample`."""
    batch = read_losses(path, spec, fmt)
    try:
        return build_sample(batch.values, support_min, support_max)
    except ValueError as exc:
        raise DataError(str(exc)) from None


# ----------------------------------------------------------------- output


def curve_to_csv(curve: LalCurve) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "limit", "k", "exact_coverage"])
    for a, lim, k in zip(curve.alphas, curve.limits, curve.ks):
        w.writerow([format_float(a), format_float(lim), int(k), format_float(1.0 - a)])
    return buf.getvalue()


def read_curve_csv(text: str) -> list[tuple[float, float]]:
    """Breakpoints ``(alpha, limit)`` from :func:`curve_to_csv` output."""
    reader = csv.DictReader(_io.StringIO(text))
    return [(float(r["alpha"]), float(r["limit"])) for r in reader]


def table_to_csv(table: CompareTable) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "sample", "limit", "k", "exact_coverage", "mean_loss"])
    for r in table.rows:
        w.writerow(
            [
                format_float(r.alpha),
                r.sample,
                format_float(r.limit),
                r.k,
                format_float(r.exact_coverage),
                format_float(r.mean_loss),
            ]
        )
    return buf.getvalue()


def _cell(value) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def rows_to_csv(rows: Sequence) -> str:
    """CSV for a list of dataclass instances sharing one type."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not rows:
        return ""
    names = [f.name for f in dataclasses.fields(rows[0])]
    w.writerow(names)
    for row in rows:
        w.writerow([_cell(getattr(row, name)) for name in names])
    return buf.getvalue()


# -------------------------------------------------------------------- svg

_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 30, 60
_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _series_from_table(table: CompareTable):
    out = []
    for name in table.names:
        pairs = sorted(
            ((r.alpha, r.limit) for r in table.rows if r.sample == name), key=lambda p: -p[0]
        )
        out.append((name, pairs, table.mean_loss[name]))
    return out


def _series_from_curves(curves: Sequence[LalCurve]):
    return [
        (c.name or f"curve {i + 1}", list(zip(map(float, c.alphas), map(float, c.limits))), c.mean_loss)
        for i, c in enumerate(curves)
    ]


def render_svg(obj, title: str = "") -> str:
    """Step curves with ``alpha`` vertical and the limit horizontal.

    ``obj`` is a :class:`LalCurve`, a list of them, or a
    :class:`CompareTable`.  Output bytes depend only on the input.
    """
    if isinstance(obj, CompareTable):
        series = _series_from_table(obj)
    elif isinstance(obj, LalCurve):
        series = _series_from_curves([obj])
    else:
        series = _series_from_curves(list(obj))
    finite = [lim for _, pairs, _ in series for _, lim in pairs if math.isfinite(lim)]
    finite += [mu for _, _, mu in series if math.isfinite(mu)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(v: float) -> float:
        if v == math.inf:
            return _LEFT + pw
        if v == -math.inf:
            return _LEFT
        return _LEFT + (v - lo) / (hi - lo) * pw

    def sy(a: float) -> float:
        return _TOP + (1.0 - a) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{_LEFT}" y="{_TOP - 10}" font-size="14">{escape(title)}</text>')
    for t in np.linspace(0.0, 1.0, 6):
        y = sy(t)
        out.append(f'<line x1="{_LEFT - 4}" y1="{_f(y)}" x2="{_LEFT}" y2="{_f(y)}" stroke="black"/>')
        out.append(
            f'<text x="{_LEFT - 8}" y="{_f(y + 4)}" font-size="11" text-anchor="end">{t:.1f}</text>'
        )
    for t in np.linspace(lo, hi, 6):
        x = sx(t)
        out.append(f'<line x1="{_f(x)}" y1="{_TOP + ph}" x2="{_f(x)}" y2="{_TOP + ph + 4}" stroke="black"/>')
        out.append(
            f'<text x="{_f(x)}" y="{_TOP + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>'
        )
    out.append(
        f'<text x="{_LEFT + pw / 2:.2f}" y="{_H - 15}" font-size="12" text-anchor="middle">limit</text>'
    )
    out.append(
        f'<text x="18" y="{_TOP + ph / 2:.2f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 18 {_TOP + ph / 2:.2f})">alpha</text>'
    )
    for idx, (name, pairs, mean) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        # the limit at alpha in [a(k), a(k-1)) is L_(k): vertical run, then step right
        points = []
        prev = 1.0
        for a, lim in pairs:
            points.append((sx(lim), sy(prev)))
            points.append((sx(lim), sy(a)))
            prev = a
        path = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if math.isfinite(mean):
            x = sx(mean)
            out.append(
                f'<line x1="{_f(x)}" y1="{_TOP}" x2="{_f(x)}" y2="{_TOP + ph}" '
                f'stroke="{color}" stroke-dasharray="4,3"/>'
            )
        ly = _TOP + 16 + 34 * idx
        lx = _LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
        out.append(
            f'<text x="{lx + 26}" y="{ly + 18}" font-size="9">mean {mean:.4g} (no guarantee)</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export(obj, fmt: str, path) -> Path:
    """Write a curve, list of curves, comparison table or report rows to ``path``.

    ``fmt`` is ``"csv"`` or ``"svg"``; report rows support CSV only.
    """
    if fmt == "svg":
        text = render_svg(obj)
    elif fmt == "csv":
        if isinstance(obj, LalCurve):
            text = curve_to_csv(obj)
        elif isinstance(obj, CompareTable):
            text = table_to_csv(obj)
        elif any(isinstance(o, LalCurve) for o in obj):
            raise ValueError("CSV export takes a single curve")
        else:
            text = rows_to_csv(list(obj))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None
    return path
