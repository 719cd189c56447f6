import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lalcurve.combinatorics import (
    EXACT_CAP,
    binomial_cdf,
    binomial_quantile,
    binomial_tail_all,
    exact_binomial_tail,
    exact_tail_a,
    log_binomial,
    log_binomial_array,
    order_pmf,
    tail_a,
    tail_a_all,
)
from lalcurve.simulate import oracle_order_pmf


def brute_binomial_quantile(p, n, beta):
    """Smallest k with exact cumulative binomial mass >= p, in rationals."""
    b, target = Fraction(beta), Fraction(p)
    cdf = Fraction(0)
    for k in range(n + 1):
        cdf += math.comb(n, k) * b**k * (1 - b) ** (n - k)
        if cdf >= target:
            return k
    return n


class TestLogBinomial:
    def test_small(self):
        assert log_binomial(6, 2) == pytest.approx(math.log(15), rel=1e-15)

    @pytest.mark.parametrize("b,r", [(5, -1), (5, 6), (-1, 0), (-3, -1), (0, 1)])
    def test_zero_convention(self, b, r):
        assert log_binomial(b, r) == -math.inf

    def test_large_matches_falling_factorial(self):
        # C(10100, 100) = prod_{i=1}^{100} (10000 + i) / i
        oracle = math.fsum(math.log(10000 + i) - math.log(i) for i in range(1, 101))
        assert log_binomial(10100, 100) == pytest.approx(oracle, rel=1e-10)

    def test_crosses_small_threshold(self):
        for b in range(0, 60):
            for r in range(0, b + 1):
                assert log_binomial(b, r) == pytest.approx(math.log(math.comb(b, r)), rel=1e-12, abs=1e-12)

    def test_array_matches_scalar(self):
        b = np.array([6, 5, 30, 100, -1, 25])
        r = np.array([2, -1, 15, 3, 0, 26])
        got = log_binomial_array(b, r)
        want = [log_binomial(int(x), int(y)) for x, y in zip(b, r)]
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_rejects_float(self):
        with pytest.raises(TypeError):
            log_binomial(6.0, 2)


class TestOrderPmf:
    def test_one_plus_one(self):
        assert order_pmf(1, 1, 1, 0) == pytest.approx(0.5)

    def test_enumerated_values(self):
        assert order_pmf(4, 2, 2, 4) == pytest.approx(5 / 15, rel=1e-14)
        assert order_pmf(4, 2, 2, 0) == pytest.approx(1 / 15, rel=1e-14)
        assert oracle_order_pmf(4, 2, 2, 4) == Fraction(5, 15)
        assert oracle_order_pmf(4, 2, 2, 0) == Fraction(1, 15)

    @pytest.mark.parametrize("args", [(4, 2, 0, 1), (4, 2, 3, 1), (4, 2, 1, -1), (4, 2, 1, 5), (0, 2, 1, 0)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            order_pmf(*args)

    @pytest.mark.parametrize("n,m", [(1, 1), (7, 3), (50, 50), (3000, 20), (10**4, 10**4)])
    def test_partition_of_unity(self, n, m):
        for i in sorted({1, (m + 1) // 2, m}):
            total = math.fsum(order_pmf(n, m, i, j) for j in range(n + 1)) if n <= 100 else None
            if total is None:
                # tail_a at k=1 plus the j=0 term is the same sum
                total = tail_a(1, n, m, i) + order_pmf(n, m, i, 0)
            assert total == pytest.approx(1.0, abs=1e-10)


class TestTailA:
    def test_examples(self):
        assert tail_a(4, 4, 2, 2) == pytest.approx(1 / 3, rel=1e-14)
        assert tail_a(8, 9, 1, 1) == pytest.approx(0.2, rel=1e-14)
        assert tail_a(5, 4, 2, 2) == 0.0

    def test_vector_against_exact(self):
        got = tail_a_all(4, 2, 2)
        want = [Fraction(14, 15), Fraction(12, 15), Fraction(9, 15), Fraction(5, 15), 0]
        np.testing.assert_allclose(got, [float(w) for w in want], rtol=1e-14)

    def test_last_is_exactly_zero(self):
        for n, m, q in [(1, 1, 1), (10, 5, 3), (300, 1000, 1000)]:
            assert tail_a_all(n, m, q)[-1] == 0.0

    @pytest.mark.parametrize("k,q", [(0, 1), (6, 1), (1, 0), (1, 3)])
    def test_domain(self, k, q):
        with pytest.raises(ValueError):
            tail_a(k, 4, 2, q)

    def test_single_future_closed_form(self):
        for n in range(1, 201):
            a = tail_a_all(n, 1, 1)
            want = (n + 1 - np.arange(1, n + 2)) / (n + 1)
            np.testing.assert_allclose(a, want, rtol=1e-12, atol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(n=st.integers(1, 200), m=st.integers(1, 200), data=st.data())
    def test_monotone_and_bounded(self, n, m, data):
        q = data.draw(st.integers(1, m))
        a = tail_a_all(n, m, q)
        assert np.all(np.diff(a) <= 0)
        assert np.all((a >= 0) & (a <= 1))
        if q < m:
            assert np.all(tail_a_all(n, m, q + 1) >= a * (1 - 1e-12))

    @settings(max_examples=200, deadline=None)
    @given(n=st.integers(1, 250), m=st.integers(1, 250), data=st.data())
    def test_matches_exact(self, n, m, data):
        q = data.draw(st.integers(1, m))
        k = data.draw(st.integers(1, n + 1))
        exact = exact_tail_a(k, n, m, q)
        got = tail_a(k, n, m, q)
        if exact == 0:
            assert got == 0.0
        else:
            assert abs(got - float(exact)) <= 1e-10 * float(exact)

    def test_tiny_tail_keeps_relative_accuracy(self):
        # last nonzero term is 1/C(500, 250) ~ 1e-149
        got = tail_a(250, 250, 250, 250)
        exact = exact_tail_a(250, 250, 250, 250)
        assert abs(got / float(exact) - 1) < 1e-10


class TestExactTail:
    def test_examples(self):
        assert exact_tail_a(1, 4, 2, 2) == Fraction(14, 15)
        assert exact_tail_a(5, 4, 2, 2) == 0
        assert exact_tail_a(4, 4, 2, 2) == Fraction(1, 3)

    def test_cap(self):
        exact_tail_a(1, 250, EXACT_CAP - 250, 1)
        with pytest.raises(ValueError, match="capped"):
            exact_tail_a(1, 251, EXACT_CAP - 250, 1)


class TestBinomial:
    def test_quantile_edges(self):
        assert binomial_quantile(0.0, 10, 0.5) == 0
        assert binomial_quantile(0.95, 10, 1.0) == 10
        assert binomial_quantile(1.0, 10, 1.0) == 10

    def test_quantile_against_exact_sum(self):
        assert brute_binomial_quantile(0.95, 150, 0.8) == 128
        assert binomial_quantile(0.95, 150, 0.8) == 128

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(1, 120),
        beta=st.floats(0.01, 1.0),
        p=st.floats(0.0, 1.0),
    )
    def test_quantile_matches_brute_force(self, n, beta, p):
        got = binomial_quantile(p, n, beta)
        want = brute_binomial_quantile(p, n, beta)
        if got != want:
            # only acceptable when p sits within round-off of a cdf value
            cdf = binomial_cdf(n, beta)
            assert abs(cdf[min(got, want)] - p) < 1e-12

    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(1, 300), beta=st.floats(0.01, 0.99), p1=st.floats(0, 1), p2=st.floats(0, 1))
    def test_quantile_monotone_in_p(self, n, beta, p1, p2):
        lo, hi = sorted((p1, p2))
        assert binomial_quantile(lo, n, beta) <= binomial_quantile(hi, n, beta)

    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(1, 300), p=st.floats(0, 1), b1=st.floats(0.01, 1.0), b2=st.floats(0.01, 1.0))
    def test_quantile_monotone_in_beta(self, n, p, b1, b2):
        lo, hi = sorted((b1, b2))
        assert binomial_quantile(p, n, lo) <= binomial_quantile(p, n, hi)

    def test_cdf_against_scipy(self):
        for n, beta in [(10, 0.5), (150, 0.8), (1000, 0.01), (5000, 0.999)]:
            np.testing.assert_allclose(
                binomial_cdf(n, beta), stats.binom.cdf(np.arange(n + 1), n, beta), rtol=1e-9, atol=1e-300
            )

    def test_upper_tail_against_exact(self):
        tails = binomial_tail_all(40, 0.3)
        for k in (1, 5, 20, 35, 40):
            assert tails[k - 1] == pytest.approx(float(exact_binomial_tail(k, 40, 0.3)), rel=1e-11)
        assert tails[-1] == 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            binomial_quantile(1.5, 10, 0.5)
        with pytest.raises(ValueError):
            binomial_quantile(0.5, 10, 0.0)
        with pytest.raises(ValueError):
            binomial_quantile(0.5, 0, 0.5)


def test_large_batch_limit_converges():
    n, k, beta = 150, 130, 0.8
    limit = 1 - binomial_cdf(n, beta)[k - 1]
    gaps = []
    for m in (10**3, 10**4, 10**5, 10**6):
        gaps.append(abs(tail_a(k, n, m, math.ceil(m * beta - 1e-9)) - limit))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
