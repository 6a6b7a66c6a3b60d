"""Optimal one-sample (Shewhart) tests and their worst-case calibration.

The detector watches the observations only.  Variant 1 assumes the
change-imposing side cannot see the hidden state and averages the
post-change observation law over the stationary state distribution;
variant 2 assumes it can, and averages over a least-favorable prior that
concentrates on the states where one-step detection is hardest.  Both stop
the first time the likelihood ratio of the averaged density against the
nominal density crosses a threshold calibrated so the mean time between
false alarms equals gamma exactly.

Gaussian AR(1) closed forms (alpha, mu, sigma2; s2 = sigma2/(1-alpha^2)):

    variant 1:  averaged density N(mu, 1+s2); stop iff |xi + mu(1-alpha^2)/sigma2| >= nu1,
                Phi(m - nu1) + Phi(-m - nu1) = 1/gamma   with m = mu(1-alpha^2)/sigma2,
                detection  beta1 = Phi((mu+m-nu1)/sqrt(1+s2)) + Phi(-(mu+m+nu1)/sqrt(1+s2))
    variant 2:  least-favorable prior = point mass at z* = -mu(1-alpha)/alpha,
                averaged density N(0, 1+sigma2); stop iff |xi| >= nu2, 2 Phi(-nu2) = 1/gamma,
                detection  beta2 = 2 Phi(-nu2/sqrt(1+sigma2))
    mismatch:   beta1_tilde = 2 Phi(-nu1/sqrt(1+sigma2))        (variant 1 vs state-aware side)
                beta2_tilde = Phi((mu-nu2)/sqrt(1+s2)) + Phi(-(mu+nu2)/sqrt(1+s2))

Discrete models get the same operations as exact sums, with threshold
randomization on the boundary atom and a multiplicative-weights fixed point
for the least-favorable prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .model import (
    ChangeModel,
    DiscreteChangeModel,
    GaussianAr1Model,
    Normal1D,
    post_conditional_obs_density,
)
from .numerics import (
    DEFAULT_QUAD_ORDER,
    bracket_root,
    norm_cdf,
    rng_stream,
    solve_monotone_root,
)
from .rules import PolicyRule, StoppingRule

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class CalibrationError(RuntimeError):
    """The false-alarm constraint cannot be met by a likelihood-ratio test."""


class EqualizationError(RuntimeError):
    """The least-favorable prior solver failed to equalize detection."""

    def __init__(self, message: str, residual_trajectory: Sequence[float] = ()):
        super().__init__(message)
        self.residual_trajectory = list(residual_trajectory)


# ---------------------------------------------------------------------------
# densities and stop regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianMixture1D:
    """Finite normal mixture; arises from multi-point priors."""

    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def pdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        comp = np.exp(-0.5 * (x - self.means) ** 2 / self.variances)
        comp /= np.sqrt(self.variances) * _SQRT_2PI
        return comp @ self.weights


@dataclass(frozen=True)
class GaussianObsRegion:
    """Two-sided stopping region |xi - center| >= radius in observation space."""

    center: float
    radius: float

    def contains(self, x):
        return np.abs(np.asarray(x, dtype=float) - self.center) >= self.radius

    def mass_under(self, mean, var):
        """P(|X - center| >= radius) for X ~ Normal(mean, var); vectorized in mean."""
        sd = math.sqrt(var)
        mean = np.asarray(mean, dtype=float)
        lo = (self.center - self.radius - mean) / sd
        hi = (mean - self.center - self.radius) / sd
        return norm_cdf(lo) + norm_cdf(hi)


@dataclass(frozen=True)
class WorstCasePrior:
    """Least-favorable prior over the pre-change state.

    ``kind`` is "point" (single continuous state), "discrete" (weights over
    state indices), or "stationary" (the degenerate case where every prior
    is worst-case and the stationary law is returned).
    """

    kind: str
    support: np.ndarray
    weights: np.ndarray
    beta2: float
    equalization_residual: float
    degenerate: bool = False


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of solving the false-alarm constraint with equality."""

    gamma: float
    threshold: float  # likelihood-ratio units
    randomization: float
    residual: float
    obs_center: Optional[float] = None
    obs_radius: Optional[float] = None


@dataclass
class GaussianShewhartPolicy:
    variant: int
    gamma: float
    density: Normal1D
    region: GaussianObsRegion
    lr_threshold: float
    randomization: float = 0.0

    def likelihood_ratio(self, x):
        x = np.asarray(x, dtype=float)
        return self.density.pdf(x) / (np.exp(-0.5 * x * x) / _SQRT_2PI)

    def log_likelihood_ratio(self, x):
        x = np.asarray(x, dtype=float)
        d = self.density
        return (
            -0.5 * (x - d.mean) ** 2 / d.var
            - math.log(d.sd)
            + 0.5 * x * x
        )

    def stop_mask(self, obs, gen=None):
        del gen  # no atoms under the nominal law
        return self.region.contains(obs)

    def detection_under(self, density: Normal1D) -> float:
        return float(self.region.mass_under(density.mean, density.var))


@dataclass
class DiscreteShewhartPolicy:
    variant: int
    gamma: float
    density: np.ndarray
    lr: np.ndarray
    lr_threshold: float
    randomization: float
    stop_probs: np.ndarray  # per-symbol stop probability in [0, 1]

    def likelihood_ratio(self, x):
        return self.lr[np.asarray(x, dtype=int)]

    def stop_mask(self, obs, gen):
        p = self.stop_probs[np.asarray(obs, dtype=int)]
        return gen.random(p.shape[0]) < p

    def detection_under(self, pmf: np.ndarray) -> float:
        return float(np.asarray(pmf, dtype=float) @ self.stop_probs)


ShewhartPolicy = Union[GaussianShewhartPolicy, DiscreteShewhartPolicy]


# ---------------------------------------------------------------------------
# averaged densities
# ---------------------------------------------------------------------------


def averaged_density_1(model: ChangeModel):
    """Post-change observation density averaged over the stationary state law."""
    if model.is_discrete:
        return model.spec.stationary @ model.post_conditional
    p = model.params
    return Normal1D(p.mu, 1.0 + model.stationary_var)


def averaged_density_2(model: ChangeModel, prior: WorstCasePrior):
    """Post-change observation density averaged over a given state prior."""
    if prior.kind == "stationary":
        return averaged_density_1(model)
    if model.is_discrete:
        return prior.weights @ model.post_conditional[prior.support.astype(int)]
    means = (1.0 - model.params.alpha) * model.params.mu + model.params.alpha * np.asarray(
        prior.support, dtype=float
    )
    var = 1.0 + model.params.sigma2
    if len(means) == 1:
        return Normal1D(float(means[0]), var)
    return GaussianMixture1D(
        means=means, variances=np.full_like(means, var), weights=np.asarray(prior.weights, float)
    )


def averaged_density_value(model: ChangeModel, xi, prior: Optional[WorstCasePrior] = None,
                           order: int = DEFAULT_QUAD_ORDER):
    """Generic evaluation of the averaged density by nested state quadrature.

    Independent of the closed forms above: integrates
    f0(xi|z) g0(z|z_prev) d(prior over z_prev) node by node.
    """
    xi = np.atleast_1d(np.asarray(xi))
    if prior is None or prior.kind == "stationary":
        zp, wp = model.stationary_nodes(order)
    else:
        zp, wp = np.asarray(prior.support), np.asarray(prior.weights, dtype=float)
    out = np.zeros(xi.shape[0])
    for z_prev, w in zip(zp, wp):
        zn, wn = model.post_transition_nodes(z_prev, order)
        out += w * (model.post_obs_density(xi[:, None], zn[None, :]) @ wn)
    return out


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


def _calibrate_gaussian(density: Normal1D, gamma: float) -> CalibrationResult:
    c, v2 = density.mean, density.var
    if v2 <= 1.0 + 1e-12:
        raise CalibrationError(
            "averaged density must be strictly wider than the nominal N(0,1)"
        )
    center = -c / (v2 - 1.0)
    target = 1.0 / gamma

    def excess(r):
        return float(norm_cdf(center - r) + norm_cdf(-center - r) - target)

    hi = abs(center) + 10.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise CalibrationError("failed to bracket the calibration radius")
    radius = solve_monotone_root(excess, bracket_root(excess, 0.0, hi), tol=1e-14)
    edge = center + radius
    lr_threshold = float(density.pdf(edge) / (math.exp(-0.5 * edge * edge) / _SQRT_2PI))
    p_stop = target + excess(radius)
    residual = abs(1.0 / p_stop - gamma) / gamma
    return CalibrationResult(
        gamma=gamma,
        threshold=lr_threshold,
        randomization=0.0,
        residual=residual,
        obs_center=center,
        obs_radius=radius,
    )


def _discrete_lr(pre_obs: np.ndarray, density: np.ndarray) -> np.ndarray:
    lr = np.zeros_like(density)
    pos = pre_obs > 0
    lr[pos] = density[pos] / pre_obs[pos]
    lr[~pos & (density > 0)] = np.inf  # never seen nominally, always alarms
    return lr


def _calibrate_discrete(pre_obs: np.ndarray, density: np.ndarray, gamma: float):
    target = 1.0 / gamma
    lr = _discrete_lr(pre_obs, density)
    values = np.unique(lr)[::-1]
    mass_above = 0.0
    for v in values:
        if v <= 0.0:
            raise CalibrationError(
                f"1/gamma = {target:.3g} exceeds the nominal mass where the "
                "likelihood ratio is positive"
            )
        mass_at = float(pre_obs[lr == v].sum())
        if mass_at == 0.0:
            continue  # no nominal mass at this atom (e.g. infinite-ratio symbols)
        if mass_above + mass_at >= target - 1e-15:
            q = 0.0 if mass_at == 0.0 else (target - mass_above) / mass_at
            q = min(max(q, 0.0), 1.0)
            stop = (lr > v).astype(float) + q * (lr == v)
            p_stop = float(pre_obs @ stop)
            residual = abs(1.0 / p_stop - gamma) / gamma
            return CalibrationResult(
                gamma=gamma, threshold=float(v), randomization=q, residual=residual
            ), stop, lr
        mass_above += mass_at
    raise CalibrationError("calibration target not reachable")  # pragma: no cover


def calibrate(model: ChangeModel, density, gamma: float) -> CalibrationResult:
    """Solve the false-alarm constraint E_inf[T] = gamma for a stop threshold.

    Continuous densities are single normals (monotone root finding on the
    two-sided region radius); discrete densities sort likelihood-ratio atoms
    and randomize on the boundary one.
    """
    if gamma <= 1.0:
        raise CalibrationError(f"gamma must exceed 1, got {gamma}")
    if model.is_discrete:
        result, _, _ = _calibrate_discrete(model.spec.pre_obs, np.asarray(density, float), gamma)
        return result
    if not isinstance(density, Normal1D):
        raise CalibrationError("continuous calibration requires a single normal density")
    return _calibrate_gaussian(density, gamma)


def build_policy(model: ChangeModel, variant: int, gamma: float,
                 prior: Optional[WorstCasePrior] = None) -> ShewhartPolicy:
    """Construct a calibrated Shewhart policy of the given variant.

    For variant 2 the least-favorable prior is solved on demand when not
    supplied.
    """
    if variant == 1:
        density = averaged_density_1(model)
    elif variant == 2:
        if prior is None:
            prior, _ = solve_worst_case_prior(model, gamma)
        density = averaged_density_2(model, prior)
    else:
        raise ValueError("variant must be 1 or 2")
    if model.is_discrete:
        result, stop, lr = _calibrate_discrete(model.spec.pre_obs, density, gamma)
        return DiscreteShewhartPolicy(
            variant=variant,
            gamma=gamma,
            density=np.asarray(density, dtype=float),
            lr=lr,
            lr_threshold=result.threshold,
            randomization=result.randomization,
            stop_probs=stop,
        )
    result = _calibrate_gaussian(density, gamma)
    return GaussianShewhartPolicy(
        variant=variant,
        gamma=gamma,
        density=density,
        region=GaussianObsRegion(result.obs_center, result.obs_radius),
        lr_threshold=result.threshold,
    )


def run_policy(policy: ShewhartPolicy, observations, gen=None):
    """First 1-based index at which the policy alarms, or None if it never does."""
    observations = np.asarray(observations)
    if observations.size == 0:
        raise ValueError("observation sequence must be nonempty")
    if isinstance(policy, GaussianShewhartPolicy):
        hits = np.flatnonzero(policy.region.contains(observations))
        return int(hits[0]) + 1 if hits.size else None
    lr = policy.likelihood_ratio(observations)
    for i, value in enumerate(lr):
        if value > policy.lr_threshold:
            return i + 1
        if value == policy.lr_threshold:
            if policy.randomization >= 1.0:
                return i + 1
            if policy.randomization > 0.0 and gen is not None and gen.random() < policy.randomization:
                return i + 1
    return None


# ---------------------------------------------------------------------------
# detection probabilities: closed forms and generic quadrature twins
# ---------------------------------------------------------------------------


def beta1(model: ChangeModel, policy: ShewhartPolicy) -> float:
    """One-step detection probability of a variant-1 policy under its own
    averaged density (no dependence on the past)."""
    del model  # kept for interface symmetry with per_state_detection
    if policy.variant != 1:
        raise ValueError("beta1 is defined for variant-1 policies")
    return policy.detection_under(policy.density)


def per_state_detection(model: ChangeModel, policy: ShewhartPolicy, z_prev) -> float:
    """Probability the policy alarms one step after a change that occurred
    with last pre-change state ``z_prev``."""
    cond = post_conditional_obs_density(model, z_prev)
    return policy.detection_under(cond)


def per_state_detection_curve(model: GaussianAr1Model, policy: GaussianShewhartPolicy, z_grid):
    """Vectorized per-state detection over a grid of pre-change states."""
    means = model._transition_mean(z_grid)
    return policy.region.mass_under(means, 1.0 + model.params.sigma2)


def mismatch_beta1_tilde(model: ChangeModel, policy: ShewhartPolicy) -> float:
    """Worst-case detection of a variant-1 policy against a state-aware
    change-imposing side: the minimum of per-state detection."""
    if policy.variant != 1:
        raise ValueError("expects a variant-1 policy")
    if model.is_discrete:
        return float(min(per_state_detection(model, policy, z) for z in range(model.state_count)))
    if abs(model.params.alpha) < 1e-12:
        return per_state_detection(model, policy, model.stationary_mean)
    return float(2.0 * norm_cdf(-policy.region.radius / math.sqrt(1.0 + model.params.sigma2)))


def mismatch_beta2_tilde(model: ChangeModel, policy: ShewhartPolicy) -> float:
    """Detection of a variant-2 policy when the change-imposing side cannot
    in fact see the state: its region mass under the stationary-averaged
    density."""
    if policy.variant != 2:
        raise ValueError("expects a variant-2 policy")
    d1 = averaged_density_1(model)
    return policy.detection_under(d1)


def _averaged_region_mass(model: GaussianAr1Model, region: GaussianObsRegion,
                          zp_nodes, zp_weights, order: int) -> float:
    """Region mass of the averaged density by nested state quadrature.

    Integrates over z_prev nodes, then over z | z_prev nodes, and closes the
    innermost observation integral with exact normal tails of f0(.|z) = N(z,1).
    """
    total = 0.0
    for z_prev, w in zip(zp_nodes, zp_weights):
        zn, wn = model.post_transition_nodes(z_prev, order)
        total += w * float(wn @ region.mass_under(zn, 1.0))
    return total


def beta1_quadrature(model: GaussianAr1Model, policy: GaussianShewhartPolicy,
                     order: int = DEFAULT_QUAD_ORDER) -> float:
    zp, wp = model.stationary_nodes(order)
    return _averaged_region_mass(model, policy.region, zp, wp, order)


def per_state_detection_quadrature(model: GaussianAr1Model, policy: GaussianShewhartPolicy,
                                   z_prev: float, order: int = DEFAULT_QUAD_ORDER) -> float:
    zn, wn = model.post_transition_nodes(z_prev, order)
    return float(wn @ policy.region.mass_under(zn, 1.0))


def mismatch_beta2_tilde_quadrature(model: GaussianAr1Model, policy: GaussianShewhartPolicy,
                                    order: int = DEFAULT_QUAD_ORDER) -> float:
    zp, wp = model.stationary_nodes(order)
    return _averaged_region_mass(model, policy.region, zp, wp, order)


def mismatch_beta1_tilde_quadrature(model: GaussianAr1Model, policy: GaussianShewhartPolicy,
                                    order: int = DEFAULT_QUAD_ORDER) -> float:
    """Generic minimum of per-state detection: coarse grid scan plus ternary
    refinement (the curve is unimodal in the conditional mean)."""
    sd = math.sqrt(model.stationary_var)
    grid = np.linspace(model.stationary_mean - 20 * sd, model.stationary_mean + 20 * sd, 401)

    def value(z):
        return per_state_detection_quadrature(model, policy, z, order)

    coarse = [value(z) for z in grid]
    k = int(np.argmin(coarse))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    for _ in range(200):
        third = (hi - lo) / 3.0
        a, b = lo + third, hi - third
        if value(a) <= value(b):
            hi = b
        else:
            lo = a
        if hi - lo < 1e-10:
            break
    return value(0.5 * (lo + hi))


def beta2_quadrature(model: GaussianAr1Model, policy: GaussianShewhartPolicy,
                     prior: WorstCasePrior, order: int = DEFAULT_QUAD_ORDER) -> float:
    if prior.kind == "stationary":
        zp, wp = model.stationary_nodes(order)
    else:
        zp, wp = np.asarray(prior.support, float), np.asarray(prior.weights, float)
    return _averaged_region_mass(model, policy.region, zp, wp, order)


# ---------------------------------------------------------------------------
# least-favorable prior
# ---------------------------------------------------------------------------


def _solve_prior_gaussian(model: GaussianAr1Model, gamma: float,
                          grid_halfwidth: float = 10.0, grid_points: int = 201):
    p = model.params
    if abs(p.alpha) < 1e-12:
        # conditional one-step law does not depend on the state: every prior is
        # least favorable, so report the stationary one and flag the degeneracy
        density = Normal1D(p.mu, 1.0 + p.sigma2)
        cal = _calibrate_gaussian(density, gamma)
        region = GaussianObsRegion(cal.obs_center, cal.obs_radius)
        beta2 = float(region.mass_under(p.mu, 1.0 + p.sigma2))
        prior = WorstCasePrior(
            kind="stationary",
            support=np.array([p.mu]),
            weights=np.array([1.0]),
            beta2=beta2,
            equalization_residual=0.0,
            degenerate=True,
        )
        return prior, cal
    z_star = -p.mu * (1.0 - p.alpha) / p.alpha
    density = Normal1D(0.0, 1.0 + p.sigma2)  # conditional mean vanishes at z_star
    cal = _calibrate_gaussian(density, gamma)
    region = GaussianObsRegion(cal.obs_center, cal.obs_radius)
    beta2 = float(2.0 * norm_cdf(-cal.obs_radius / math.sqrt(1.0 + p.sigma2)))
    support_value = float(region.mass_under(model._transition_mean(z_star), 1.0 + p.sigma2))
    residual = abs(support_value - beta2)
    z_grid = np.linspace(z_star - grid_halfwidth, z_star + grid_halfwidth, grid_points)
    off = region.mass_under(model._transition_mean(z_grid), 1.0 + p.sigma2)
    worst_violation = float(np.min(off) - beta2)
    if residual > 1e-9 or worst_violation < -1e-9:
        raise EqualizationError(
            f"analytic prior failed verification: residual {residual:.2e}, "
            f"worst off-support violation {worst_violation:.2e}"
        )
    prior = WorstCasePrior(
        kind="point",
        support=np.array([z_star]),
        weights=np.array([1.0]),
        beta2=beta2,
        equalization_residual=residual,
    )
    return prior, cal


def _solve_prior_discrete(model: DiscreteChangeModel, gamma: float,
                          step: float = 0.5, prune: float = 1e-12,
                          tol: float = 1e-9, max_iter: int = 10_000):
    """Fixed point: calibrate for the current prior, measure per-state
    detection, shift log-weights toward the current minimizers."""
    f0c = model.post_conditional
    pre_obs = model.spec.pre_obs
    log_w = np.zeros(model.state_count)
    trajectory = []
    for _ in range(max_iter):
        w = np.exp(log_w - log_w.max())
        pi = w / w.sum()
        fbar2 = pi @ f0c
        cal, stop, _ = _calibrate_discrete(pre_obs, fbar2, gamma)
        d = f0c @ stop
        on_support = pi > prune
        beta2 = float(pi @ d)
        residual = float(np.max(np.abs(d[on_support] - beta2)))
        off_violation = 0.0
        if np.any(~on_support):
            off_violation = float(max(0.0, beta2 - np.min(d[~on_support])))
        trajectory.append(residual)
        if residual <= tol and off_violation <= tol:
            support = np.flatnonzero(on_support)
            prior = WorstCasePrior(
                kind="discrete",
                support=support,
                weights=pi[support] / pi[support].sum(),
                beta2=beta2,
                equalization_residual=residual,
            )
            return prior, cal
        span = float(d.max() - d.min())
        if span == 0.0:
            continue  # equalized everywhere; next pass reports residual 0
        log_w -= step * (d - d.min()) / span
    raise EqualizationError(
        f"prior fixed point did not converge in {max_iter} iterations "
        f"(last residual {trajectory[-1]:.3e})",
        residual_trajectory=trajectory,
    )


def solve_worst_case_prior(model: ChangeModel, gamma: float, **kwargs):
    """Solve jointly for the least-favorable prior and the calibrated
    variant-2 threshold.

    Returns ``(prior, calibration)``; per-state detection is constant on the
    prior's support and no smaller anywhere else (verified to 1e-9).
    """
    if gamma <= 1.0:
        raise CalibrationError(f"gamma must exceed 1, got {gamma}")
    if model.is_discrete:
        return _solve_prior_discrete(model, gamma, **kwargs)
    return _solve_prior_gaussian(model, gamma, **kwargs)


def worst_state(model: ChangeModel, policy: ShewhartPolicy):
    """State value minimizing the one-step detection of ``policy``.

    Returns None for the alpha = 0 degeneracy, where detection does not
    depend on the state.
    """
    if model.is_discrete:
        d = model.post_conditional @ policy.stop_probs
        return int(np.argmin(d))
    p = model.params
    if abs(p.alpha) < 1e-12:
        return None
    return (policy.region.center - (1.0 - p.alpha) * p.mu) / p.alpha


# ---------------------------------------------------------------------------
# discrete enumeration oracle
# ---------------------------------------------------------------------------


def enumerate_calibrated_detectors(model: DiscreteChangeModel, gamma: float):
    """All one-step detectors calibrated to gamma with at most one
    fractionally-randomized symbol.

    These are exactly the vertices of {0 <= A <= 1, sum f_inf A = 1/gamma},
    i.e. every threshold/randomization choice on the observation alphabet.
    Returns an array of per-symbol stop-probability rows.
    """
    pre_obs = model.spec.pre_obs
    target = 1.0 / gamma
    nx = model.obs_count
    if nx > 16:
        raise ValueError("detector enumeration is limited to alphabets of size <= 16")
    detectors = []
    for region_bits in range(1 << nx):
        region = np.array([(region_bits >> k) & 1 for k in range(nx)], dtype=float)
        mass = float(pre_obs @ region)
        if abs(mass - target) <= 1e-13:
            detectors.append(region)
            continue
        if mass > target:
            continue
        deficit = target - mass
        for a in range(nx):
            if region[a] == 1.0 or pre_obs[a] <= 0.0:
                continue
            if deficit <= pre_obs[a] + 1e-13:
                q = min(deficit / pre_obs[a], 1.0)
                cut = region.copy()
                cut[a] = q
                detectors.append(cut)
    return np.array(detectors)


def worst_prior_oracle(model: DiscreteChangeModel, gamma: float, support_tol: float = 1e-9):
    """Independent check of the discrete prior solver.

    Minimizes, over priors pi, the best calibrated detector's detection of
    the pi-mixture; by LP duality this is the least-favorable-prior value,
    and the optimizer satisfies the equalization conditions.  Uses only the
    enumerated calibrated detectors plus a linear program, sharing nothing
    with the fixed-point path.
    """
    from scipy.optimize import linprog

    detectors = enumerate_calibrated_detectors(model, gamma)
    d_matrix = model.post_conditional @ detectors.T  # (n_states, n_detectors)
    nz = model.state_count
    # variables: (pi_1..pi_nz, t); minimize t s.t. d_matrix[:,k] . pi <= t
    c = np.zeros(nz + 1)
    c[-1] = 1.0
    a_ub = np.hstack([d_matrix.T, -np.ones((d_matrix.shape[1], 1))])
    b_ub = np.zeros(d_matrix.shape[1])
    a_eq = np.zeros((1, nz + 1))
    a_eq[0, :nz] = 1.0
    bounds = [(0.0, None)] * nz + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds,
                  method="highs")
    if not res.success:
        raise EqualizationError(f"oracle LP failed: {res.message}")
    pi = np.maximum(res.x[:nz], 0.0)
    pi /= pi.sum()
    beta2 = float(res.x[-1])
    support = np.flatnonzero(pi > support_tol)
    best_competitor = float(np.max(np.min(d_matrix, axis=0)))
    return WorstCasePrior(
        kind="discrete",
        support=support,
        weights=pi[support] / pi[support].sum(),
        beta2=beta2,
        equalization_residual=float("nan"),
    ), best_competitor


# ---------------------------------------------------------------------------
# Theorem 1 and Theorem 2 numeric checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioEstimate:
    """Monte-Carlo estimate of E_inf[L(xi_T)] / E_inf[T] with delta-method SE."""

    ratio: float
    std_error: float
    mean_lr: float
    mean_time: float
    trials: int
    truncated: int
    seed: int


def theorem1_ratio(model: ChangeModel, rule: StoppingRule, lr_policy: ShewhartPolicy,
                   trials: int, seed: int, horizon_cap: int = 200_000,
                   workers: int = 1) -> RatioEstimate:
    """Estimate the Theorem-1 ratio for any stopping rule under the nominal law.

    The likelihood ratio is taken from ``lr_policy`` (variant j chooses L_j).
    For the Shewhart rule itself the ratio equals beta_j.
    """
    per = np.array_split(np.arange(trials), workers)
    t_all = np.empty(trials)
    l_all = np.empty(trials)
    truncated = 0
    pos = 0
    for wid, chunk in enumerate(per):
        n = chunk.size
        if n == 0:
            continue
        gen = rng_stream(seed, wid)
        rule.reset(n, gen)
        t_block = np.zeros(n)
        l_block = np.zeros(n)
        stopped0 = rule.initial_stop(n, gen)
        active = np.flatnonzero(~stopped0)
        t = 0
        while active.size and t < horizon_cap:
            t += 1
            obs = model.sample_obs_pre(gen, active.size)
            mask = rule.stop(t, obs, active, gen)
            hit = active[mask]
            t_block[hit] = t
            l_block[hit] = lr_policy.likelihood_ratio(obs[mask])
            active = active[~mask]
        truncated += active.size
        t_block[active] = horizon_cap
        t_all[pos:pos + n] = t_block
        l_all[pos:pos + n] = l_block
        pos += n
    mean_t = float(t_all.mean())
    mean_l = float(l_all.mean())
    ratio = mean_l / mean_t
    cov = np.cov(l_all, t_all)
    var_ratio = (cov[0, 0] - 2 * ratio * cov[0, 1] + ratio ** 2 * cov[1, 1]) / (
        trials * mean_t ** 2
    )
    return RatioEstimate(
        ratio=ratio,
        std_error=math.sqrt(max(var_ratio, 0.0)),
        mean_lr=mean_l,
        mean_time=mean_t,
        trials=trials,
        truncated=truncated,
        seed=seed,
    )


@dataclass(frozen=True)
class FamilyMemberReport:
    name: str
    ratio_1: float
    se_1: float
    ratio_2: float
    se_2: float
    mean_time: float
    passed: bool


@dataclass(frozen=True)
class Theorem2Report:
    gamma: float
    beta_1: float
    beta_2: float
    members: tuple
    passed: bool


def _estimate_mean_time(model, rule, trials, seed, horizon_cap):
    gen = rng_stream(seed, 9999)
    rule.reset(trials, gen)
    t_block = np.zeros(trials)
    stopped0 = rule.initial_stop(trials, gen)
    active = np.flatnonzero(~stopped0)
    t = 0
    while active.size and t < horizon_cap:
        t += 1
        obs = model.sample_obs_pre(gen, active.size)
        mask = rule.stop(t, obs, active, gen)
        t_block[active[mask]] = t
        active = active[~mask]
    t_block[active] = horizon_cap
    return float(t_block.mean())


def theorem2_family_check(model: GaussianAr1Model, gamma: float, trials: int,
                          seed: int, horizon_cap: Optional[int] = None) -> Theorem2Report:
    """Check E_inf[L_j(xi_T)] / E_inf[T] <= beta_j across a family of
    stopping rules calibrated (or randomized down) to mean time gamma."""
    from .numerics import derive_seed, norm_quantile
    from .rules import (
        FixedTimeRule,
        OneSidedRule,
        ShiftedTwoSidedRule,
        TimeZeroRandomizedRule,
        TruncatedCusumRule,
    )

    if horizon_cap is None:
        horizon_cap = max(int(40 * gamma), 1000)
    pol1 = build_policy(model, 1, gamma)
    prior, _ = solve_worst_case_prior(model, gamma)
    pol2 = build_policy(model, 2, gamma, prior=prior)
    b1 = beta1(model, pol1)
    b2 = prior.beta2

    members = [PolicyRule(pol1), PolicyRule(pol2),
               OneSidedRule(norm_quantile(1.0 - 1.0 / gamma))]
    for shift in (0.5, 1.0):
        def excess(cc, s=shift):
            return float(norm_cdf(s - cc) + norm_cdf(-s - cc) - 1.0 / gamma)
        c = solve_monotone_root(excess, bracket_root(excess, 0.0, 40.0), tol=1e-13)
        members.append(ShiftedTwoSidedRule(shift, c))
    k = math.ceil(gamma)
    fixed = FixedTimeRule(k)
    if k > gamma:
        members.append(TimeZeroRandomizedRule(fixed, 1.0 - gamma / k))
    else:
        members.append(fixed)
    # truncated CUSUM: pick h with mean time above gamma, randomize down
    pilot_seed = derive_seed(seed, 1)
    h = 0.5 * math.log(gamma)
    cusum_member = None
    for _ in range(12):
        candidate = TruncatedCusumRule(pol2.log_likelihood_ratio, h)
        mean_t = _estimate_mean_time(model, candidate, min(trials, 20_000),
                                     pilot_seed, horizon_cap)
        if mean_t >= 1.05 * gamma:
            cusum_member = TimeZeroRandomizedRule(candidate, 1.0 - gamma / mean_t)
            break
        h *= 1.6
    if cusum_member is not None:
        members.append(cusum_member)

    reports = []
    all_pass = True
    for i, member in enumerate(members):
        est1 = theorem1_ratio(model, member, pol1, trials, derive_seed(seed, 10 + i),
                              horizon_cap=horizon_cap)
        est2 = theorem1_ratio(model, member, pol2, trials, derive_seed(seed, 10 + i),
                              horizon_cap=horizon_cap)
        ok = (est1.ratio <= b1 + 3.0 * est1.std_error) and (
            est2.ratio <= b2 + 3.0 * est2.std_error
        )
        all_pass &= ok
        reports.append(
            FamilyMemberReport(
                name=member.name,
                ratio_1=est1.ratio,
                se_1=est1.std_error,
                ratio_2=est2.ratio,
                se_2=est2.std_error,
                mean_time=est1.mean_time,
                passed=ok,
            )
        )
    return Theorem2Report(gamma=gamma, beta_1=b1, beta_2=b2,
                          members=tuple(reports), passed=all_pass)


# ---------------------------------------------------------------------------
# Figure-level convenience
# ---------------------------------------------------------------------------


def gaussian_curve_values(model: GaussianAr1Model, gamma: float) -> dict:
    """All Figure-1 quantities at one gamma: thresholds in observation units
    and the four detection probabilities."""
    pol1 = build_policy(model, 1, gamma)
    prior, cal2 = solve_worst_case_prior(model, gamma)
    pol2 = build_policy(model, 2, gamma, prior=prior)
    return {
        "gamma": gamma,
        "nu1": pol1.region.radius,
        "nu2": cal2.obs_radius,
        "beta1": beta1(model, pol1),
        "beta2": prior.beta2,
        "beta1_tilde": mismatch_beta1_tilde(model, pol1),
        "beta2_tilde": mismatch_beta2_tilde(model, pol2),
    }
