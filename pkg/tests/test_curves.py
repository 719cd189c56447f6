import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lalcurve.core import INF, LalQuery, lal
from lalcurve.curves import compare_table, curve_breakpoints
from lalcurve.sample import build_sample
from lalcurve.simulate import oracle_order_pmf


def test_single_point():
    c = curve_breakpoints(build_sample([7.0]), 1, 1.0)
    assert c.breakpoints() == [(0.5, 7.0), (0.0, math.inf)]


def test_four_points_pair_of_futures():
    c = curve_breakpoints(build_sample([1, 2, 3, 4]), 2, 1.0)
    # suffix sums of the enumerated pmf over j = k..4
    pmf = [oracle_order_pmf(4, 2, 2, j) for j in range(5)]
    want = [float(sum(pmf[k:], Fraction(0))) for k in range(1, 5)] + [0.0]
    np.testing.assert_allclose(c.alphas, want, rtol=1e-14)
    np.testing.assert_allclose(c.alphas, [14 / 15, 12 / 15, 9 / 15, 5 / 15, 0.0], rtol=1e-14)
    assert list(c.limits) == [1, 2, 3, 4, math.inf]


def test_uniform_steps_for_single_future():
    c = curve_breakpoints(build_sample(np.arange(9.0)), 1, 1.0)
    np.testing.assert_allclose(c.alphas, np.arange(9, -1, -1) / 10, rtol=1e-12, atol=1e-16)


def test_infinite_batch_uses_binomial_tail():
    from scipy import stats

    c = curve_breakpoints(build_sample(np.arange(20.0)), INF, 0.7)
    want = stats.binom.sf(np.arange(0, 21), 20, 0.7)
    np.testing.assert_allclose(c.alphas, want, rtol=1e-10, atol=1e-300)


def test_invariants():
    c = curve_breakpoints(build_sample(np.random.default_rng(0).exponential(size=40)), 5, 0.6)
    assert len(c.alphas) == c.n + 1 == 41
    assert np.all(c.alphas[:-1] > 0) and c.alphas[-1] == 0
    assert np.all(np.diff(c.alphas) <= 0)
    assert np.all(np.diff(c.limits) >= 0)


def test_evaluate_above_first_breakpoint():
    c = curve_breakpoints(build_sample([1, 2, 3, 4]), 2, 1.0)
    assert c.evaluate(0.99) == 1.0
    assert c.evaluate(14 / 15) == 1.0
    assert c.evaluate(0.34) == 4.0
    assert c.evaluate(0.001) == math.inf


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=30),
    st.one_of(st.integers(1, 40), st.just(INF)),
    st.floats(0.05, 1.0),
    st.lists(st.floats(0.001, 0.999), min_size=20, max_size=20),
)
def test_curve_agrees_with_point_queries(raw, m, beta, grid):
    s = build_sample(raw)
    c = curve_breakpoints(s, m, beta)
    for a in grid:
        out = lal(s, LalQuery(m, beta, a))
        assert c.k_at(a) == out.k_star
        assert c.evaluate(a) == out.limit


class TestCompare:
    def test_shift_by_constant(self):
        a = build_sample(np.random.default_rng(1).normal(size=30))
        b = build_sample(a.values + 1.0)
        t = compare_table({"A": a, "B": b}, 1, 1.0, [0.05, 0.1, 0.3, 0.5])
        for la, lb in zip(t.column("A"), t.column("B")):
            assert lb == la + 1.0
        assert t.mean_loss["B"] == pytest.approx(t.mean_loss["A"] + 1.0)

    def test_same_sample_twice(self):
        a = build_sample([3.0, 1.0, 2.0, 5.0])
        t = compare_table({"x": a, "y": a}, 2, 0.5, [0.2, 0.6])
        assert t.column("x") == t.column("y")
        assert t.column("x", "exact_coverage") == t.column("y", "exact_coverage")

    def test_needs_two(self):
        with pytest.raises(ValueError):
            compare_table({"x": build_sample([1.0])}, 1, 1.0, [0.1])
