import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmmcd.numerics import (
    BracketingError,
    QuadratureRule,
    bracket_root,
    gauss_hermite_expect,
    gauss_hermite_rule,
    norm_cdf,
    norm_quantile,
    rng_stream,
    solve_monotone_root,
)


def _bisect_quantile(p, tol=1e-13):
    """Independent quantile oracle: plain bisection on norm_cdf."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestNormCdf:
    def test_symmetry_at_zero(self):
        assert norm_cdf(0.0) == 0.5

    def test_quantile_oracle_point(self):
        # 2 Phi(-nu) = 1/100 inverted with the bisection oracle
        nu = -_bisect_quantile(0.005)
        assert abs(nu - 2.5758293) < 1e-6
        assert abs(norm_cdf(-2.5758293) - 0.005) < 1e-7

    @pytest.mark.parametrize("x", [0.3, 1.7, 4.2])
    def test_reflection(self, x):
        assert abs(norm_cdf(x) - (1.0 - norm_cdf(-x))) < 1e-14

    def test_against_mpmath(self):
        mpmath = pytest.importorskip("mpmath")
        for x in [-8.0, -3.3, -1.0, 0.1, 2.0, 5.5, 8.0]:
            exact = float(mpmath.ncdf(x))
            assert abs(float(norm_cdf(x)) - exact) <= 1e-15

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=30))
    def test_monotone_and_reflected(self, xs):
        grid = np.sort(np.asarray(xs))
        values = norm_cdf(grid)
        assert np.all(np.diff(values) >= 0)
        assert np.max(np.abs(norm_cdf(-grid) + values - 1.0)) < 1e-14


class TestNormQuantile:
    def test_median(self):
        assert norm_quantile(0.5) == 0.0

    def test_tail_value(self):
        assert abs(norm_quantile(0.0005) - (-3.29053)) < 1e-4
        assert abs(norm_quantile(0.0005) - _bisect_quantile(0.0005)) < 1e-9

    def test_roundtrip_grid(self):
        for x in np.linspace(-5, 5, 41):
            assert abs(norm_quantile(float(norm_cdf(x))) - x) < 1e-9

    def test_inverse_residual(self):
        for p in (1e-9, 1e-4, 0.3, 0.97, 1 - 1e-9):
            assert abs(float(norm_cdf(norm_quantile(p))) - p) < 1e-12

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            norm_quantile(p)


class TestGaussHermite:
    def test_rule_invariants(self):
        rule = gauss_hermite_rule(64)
        assert rule.order == 64
        assert np.all(np.diff(rule.nodes) > 0)
        assert abs(rule.weights.sum() - math.sqrt(math.pi)) < 1e-12

    def test_bad_rule_rejected(self):
        good = gauss_hermite_rule(8)
        with pytest.raises(ValueError):
            QuadratureRule(nodes=good.nodes[::-1].copy(), weights=good.weights, order=8)

    def test_normalization_and_moments(self):
        assert abs(gauss_hermite_expect(lambda z: np.ones_like(z), 1.7, 0.3) - 1.0) < 1e-12
        assert abs(gauss_hermite_expect(lambda z: z, -2.5, 4.0) - (-2.5)) < 1e-12
        assert abs(gauss_hermite_expect(lambda z: z * z, 1.0, 2.0 / 3.0) - (1.0 + 2.0 / 3.0)) < 1e-12

    def test_high_moments(self):
        # closed-form moments of N(mu, s2) via binomial + double factorial
        mu, s2 = 0.7, 1.3
        s = math.sqrt(s2)

        def exact_moment(k):
            total = 0.0
            for j in range(0, k + 1, 2):
                dfact = 1.0
                for m in range(j - 1, 0, -2):
                    dfact *= m
                total += math.comb(k, j) * dfact * s ** j * mu ** (k - j)
            return total

        for k in range(11):
            approx = gauss_hermite_expect(lambda z, k=k: z ** k, mu, s2, order=64)
            assert abs(approx - exact_moment(k)) < 1e-10 * max(1.0, abs(exact_moment(k)))

    def test_bad_variance(self):
        with pytest.raises(ValueError):
            gauss_hermite_expect(lambda z: z, 0.0, -1.0)


class TestRootFinding:
    def test_linear(self):
        f = lambda x: x - 2.0
        root = solve_monotone_root(f, bracket_root(f, 0.0, 5.0), tol=1e-12)
        assert abs(root - 2.0) < 1e-11

    def test_two_sided_tail_equation(self):
        f = lambda nu: 2.0 * float(norm_cdf(-nu)) - 0.001
        root = solve_monotone_root(f, bracket_root(f, 0.0, 10.0), tol=1e-13)
        assert abs(root - 3.2905267314918945) < 1e-9
        assert abs(f(root)) <= 1e-13

    def test_asymmetric_tail_equation(self):
        f = lambda nu: float(norm_cdf(1.5 - nu) + norm_cdf(-1.5 - nu)) - 0.01
        root = solve_monotone_root(f, bracket_root(f, 0.0, 10.0), tol=1e-13)
        assert abs(root - 3.826349753933126) < 1e-9
        # the second tail is ~5e-8, so the root sits just below 1.5 - Phi^{-1}(0.01)
        assert abs(root - (1.5 - norm_quantile(0.01))) < 1e-5

    def test_residual_reevaluates(self):
        f = lambda x: math.tanh(x) - 0.123
        root = solve_monotone_root(f, bracket_root(f, -3.0, 3.0), tol=1e-12)
        assert abs(f(root)) <= 1e-12

    def test_no_sign_change(self):
        with pytest.raises(BracketingError):
            bracket_root(lambda x: x * x + 1.0, -1.0, 1.0)


class TestRngStreams:
    def test_determinism(self):
        a = rng_stream(42, 0).random(100)
        b = rng_stream(42, 0).random(100)
        assert np.array_equal(a, b)

    def test_stream_separation(self):
        a = rng_stream(42, 0).random(100)
        b = rng_stream(42, 1).random(100)
        assert not np.array_equal(a, b)

    def test_uniform_mean(self):
        draws = rng_stream(7, 3).random(1_000_000)
        assert abs(draws.mean() - 0.5) < 0.002
