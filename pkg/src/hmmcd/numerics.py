"""Scalar numerical kernels shared across the package.

Provides the standard normal CDF / quantile pair, Gauss-Hermite expectations
against a normal measure, bracketed monotone root finding, and the seeded
random-stream contract used by every Monte-Carlo routine.

Gauss-Hermite quadrature in physicists' normalization integrates

    integral exp(-x^2) g(x) dx ~= sum_i w_i g(x_i),   sum_i w_i = sqrt(pi).

The substitution z = mean + sqrt(2 var) x turns this into an expectation
E[f(Z)] for Z ~ Normal(mean, var), exact for polynomial f of degree < 2n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import erfc, ndtri

DEFAULT_QUAD_ORDER = 64

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)


class BracketingError(ValueError):
    """The supplied interval does not bracket a sign change."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget without meeting tolerance."""


def norm_cdf(x):
    """Standard normal CDF via the complementary error function.

    erfc keeps full relative accuracy in both tails, so the absolute error
    is below 1e-15 for any finite argument.  Accepts scalars or arrays.
    """
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_quantile(p: float) -> float:
    """Inverse of ``norm_cdf`` on (0, 1).

    Raises ValueError outside the open unit interval.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {p}")
    return float(ndtri(p))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes/weights in physicists' normalization."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be >= 2")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - _SQRT_PI) > 1e-12:
            raise ValueError("weights must sum to sqrt(pi)")


@lru_cache(maxsize=16)
def gauss_hermite_rule(order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
    """Return the physicists' Gauss-Hermite rule of the given order (cached;
    treat the node/weight arrays as read-only)."""
    nodes, weights = hermgauss(order)
    return QuadratureRule(nodes=nodes, weights=weights, order=order)


def gauss_hermite_expect(
    f: Callable[[np.ndarray], np.ndarray],
    mean: float,
    var: float,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """Approximate E[f(Z)] for Z ~ Normal(mean, var).

    Exact (up to roundoff) for polynomial f with degree < 2*order.
    """
    if var <= 0:
        raise ValueError(f"variance must be positive, got {var}")
    rule = gauss_hermite_rule(order)
    z = mean + _SQRT2 * math.sqrt(var) * rule.nodes
    values = np.asarray(f(z), dtype=float)
    return float(rule.weights @ values / _SQRT_PI)


@dataclass(frozen=True)
class RootBracket:
    """An interval [lo, hi] on which f changes sign (or touches zero)."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")
        if self.f_lo * self.f_hi > 0:
            raise BracketingError(
                f"no sign change on [{self.lo}, {self.hi}]: "
                f"f(lo)={self.f_lo}, f(hi)={self.f_hi}"
            )


def bracket_root(f: Callable[[float], float], lo: float, hi: float) -> RootBracket:
    """Evaluate the endpoints and build a :class:`RootBracket`."""
    return RootBracket(lo=lo, hi=hi, f_lo=f(lo), f_hi=f(hi))


def solve_monotone_root(
    f: Callable[[float], float],
    bracket: RootBracket,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Bisect to a point with |f(x)| <= tol.

    Bisection is derivative-free and cannot diverge on a valid bracket;
    every calibration equation in this package is monotone in its unknown,
    so no faster method is needed.
    """
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi
    lo, hi = bracket.lo, bracket.hi
    f_lo = bracket.f_lo
    best_x, best_f = lo, abs(f_lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) < best_f:
            best_x, best_f = mid, abs(f_mid)
        if best_f <= tol:
            return best_x
        if mid in (lo, hi):  # interval exhausted at float resolution
            break
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    if best_f <= tol:
        return best_x
    raise ConvergenceError(
        f"bisection stalled with residual {best_f:.3e} > tol {tol:.3e}"
    )


def rng_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Deterministic, independent generator stream.

    Identical (master_seed, stream_id) pairs reproduce identical draws on
    any platform; distinct stream ids give statistically independent
    sequences (numpy SeedSequence spawn keys).
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id,))
    return np.random.default_rng(seq)


def derive_seed(master_seed: int, task_id: int) -> int:
    """Stable 64-bit sub-seed for task ``task_id`` under a master seed."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(task_id,))
    hi, lo = seq.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)
