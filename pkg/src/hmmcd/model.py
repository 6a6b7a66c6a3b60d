"""Hidden-Markov change models.

A change model bundles the nominal regime (i.i.d. observations with density
``f_inf``, hidden Markov states with transition kernel ``g_inf`` started from
its stationary law) with the alternative regime (observations drawn from
``f0(.|z_t)``, states from ``g0``).  A change at time ``tau`` means every
observation and state transition strictly after ``tau`` follows the
alternative regime.

Two instantiations are provided: the Gaussian AR(1) model (observations
N(0,1) before the change, N(z_t,1) after, with z_t = mu + v_t and
v_t ~ N(alpha v_{t-1}, sigma2)), and finite discrete models where every
integral is an exact sum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .numerics import DEFAULT_QUAD_ORDER, gauss_hermite_rule, norm_cdf

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)

ChangeTime = Union[int, float]  # nonnegative int, or math.inf for "never"


class ModelValidationError(ValueError):
    """A density, kernel, or stationarity requirement failed at construction."""


@dataclass(frozen=True)
class Normal1D:
    """A univariate normal density used as a value object."""

    mean: float
    var: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mean) ** 2 / self.var) / (self.sd * _SQRT_2PI)

    def cdf(self, x):
        return norm_cdf((np.asarray(x, dtype=float) - self.mean) / self.sd)


@dataclass(frozen=True)
class GaussianAr1Params:
    """Parameters of the Gaussian AR(1) change model."""

    alpha: float
    mu: float
    sigma2: float

    def __post_init__(self):
        if not abs(self.alpha) < 1.0:
            raise ModelValidationError(f"|alpha| must be < 1, got {self.alpha}")
        if not self.sigma2 > 0.0:
            raise ModelValidationError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One simulated path: states z_0..z_H and observations xi_1..xi_H."""

    tau: ChangeTime
    observations: np.ndarray
    states: np.ndarray
    horizon: int


class GaussianAr1Model:
    """The Gaussian AR(1) instantiation; the Markov process itself does not change."""

    is_discrete = False

    def __init__(self, params: GaussianAr1Params):
        self.params = params
        a, mu, s2 = params.alpha, params.mu, params.sigma2
        self.stationary_mean = mu
        self.stationary_var = s2 / (1.0 - a * a)
        self._stationary = Normal1D(self.stationary_mean, self.stationary_var)
        self._check_stationarity()

    def _check_stationarity(self, grid_points: int = 41, tol: float = 1e-8):
        """Quadrature check that g_inf is invariant for the transition kernel."""
        sd = math.sqrt(self.stationary_var)
        grid = np.linspace(self.stationary_mean - 6 * sd, self.stationary_mean + 6 * sd, grid_points)
        z, w = self.stationary_nodes()
        mixed = np.array([w @ self.pre_transition(zp, z) for zp in grid])
        residual = np.max(np.abs(mixed - self.stationary_density(grid)))
        if residual > tol:
            raise ModelValidationError(
                f"stationarity residual {residual:.3e} exceeds {tol:.1e}"
            )

    # densities -----------------------------------------------------------
    def pre_obs_density(self, x):
        return Normal1D(0.0, 1.0).pdf(x)

    def post_obs_density(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * (x - z) ** 2) / _SQRT_2PI

    def _transition_mean(self, z_prev):
        a, mu = self.params.alpha, self.params.mu
        return (1.0 - a) * mu + a * np.asarray(z_prev, dtype=float)

    def pre_transition(self, z_next, z_prev):
        m = self._transition_mean(z_prev)
        s2 = self.params.sigma2
        return np.exp(-0.5 * (np.asarray(z_next, dtype=float) - m) ** 2 / s2) / (
            math.sqrt(s2) * _SQRT_2PI
        )

    post_transition = pre_transition  # the hidden process does not change

    def stationary_density(self, z):
        return self._stationary.pdf(z)

    # samplers (batch, exact conditional closed forms) ---------------------
    def sample_stationary(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self.stationary_mean + math.sqrt(self.stationary_var) * gen.standard_normal(n)

    def step_states(self, z, gen: np.random.Generator, post: bool) -> np.ndarray:
        del post  # same kernel in both regimes
        z = np.asarray(z, dtype=float)
        return self._transition_mean(z) + math.sqrt(self.params.sigma2) * gen.standard_normal(z.shape)

    def sample_obs_pre(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.standard_normal(n)

    def sample_obs_post(self, z, gen: np.random.Generator) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z + gen.standard_normal(z.shape)

    # state discretizations for generic quadrature paths -------------------
    def stationary_nodes(self, order: int = DEFAULT_QUAD_ORDER):
        rule = gauss_hermite_rule(order)
        z = self.stationary_mean + math.sqrt(2.0 * self.stationary_var) * rule.nodes
        return z, rule.weights / _SQRT_PI

    def post_transition_nodes(self, z_prev: float, order: int = DEFAULT_QUAD_ORDER):
        rule = gauss_hermite_rule(order)
        z = self._transition_mean(z_prev) + math.sqrt(2.0 * self.params.sigma2) * rule.nodes
        return z, rule.weights / _SQRT_PI


@dataclass
class DiscreteModel:
    """Raw arrays of a finite model; validated by :func:`make_discrete`.

    ``pre_obs`` is the nominal observation pmf over the observation alphabet,
    ``post_obs[z]`` the post-change pmf given state ``z``, the transition
    matrices are row-stochastic with rows indexed by the previous state, and
    ``stationary`` must be invariant for ``pre_trans``.
    """

    pre_obs: np.ndarray
    post_obs: np.ndarray
    pre_trans: np.ndarray
    post_trans: np.ndarray
    stationary: np.ndarray
    state_count: int = field(init=False)
    obs_count: int = field(init=False)

    def __post_init__(self):
        self.pre_obs = np.asarray(self.pre_obs, dtype=float)
        self.post_obs = np.asarray(self.post_obs, dtype=float)
        self.pre_trans = np.asarray(self.pre_trans, dtype=float)
        self.post_trans = np.asarray(self.post_trans, dtype=float)
        self.stationary = np.asarray(self.stationary, dtype=float)
        self.state_count = self.post_obs.shape[0]
        self.obs_count = self.pre_obs.shape[0]

    def validate(self, tol: float = 1e-12):
        def check_rows(name, mat, width):
            mat = np.atleast_2d(mat)
            if mat.shape[1] != width:
                raise ModelValidationError(f"{name}: expected row length {width}, got {mat.shape[1]}")
            for i, row in enumerate(mat):
                if np.any(row < 0):
                    raise ModelValidationError(f"{name}: negative entry in row {i}")
                if abs(row.sum() - 1.0) > tol:
                    raise ModelValidationError(
                        f"{name}: row {i} sums to {row.sum():.15f}, not 1"
                    )

        nz, nx = self.state_count, self.obs_count
        check_rows("pre_obs", self.pre_obs, nx)
        check_rows("post_obs", self.post_obs, nx)
        check_rows("pre_trans", self.pre_trans, nz)
        check_rows("post_trans", self.post_trans, nz)
        check_rows("stationary", self.stationary, nz)
        residual = np.max(np.abs(self.stationary @ self.pre_trans - self.stationary))
        if residual > tol:
            raise ModelValidationError(
                f"stationary: not invariant under pre_trans (residual {residual:.3e})"
            )


def discrete_model_from_json(source) -> DiscreteModel:
    """Load a DiscreteModel from a JSON file path, file object, or dict."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    required = ["pre_obs", "post_obs", "pre_trans", "post_trans", "stationary"]
    missing = [k for k in required if k not in doc]
    if missing:
        raise ModelValidationError(f"missing keys in discrete model JSON: {missing}")
    return DiscreteModel(**{k: np.asarray(doc[k], dtype=float) for k in required})


class DiscreteChangeModel:
    """Finite-alphabet change model; every integral is an exact sum."""

    is_discrete = True

    def __init__(self, spec: DiscreteModel):
        spec.validate()
        self.spec = spec
        self._pre_obs_cum = np.cumsum(spec.pre_obs)
        self._post_obs_cum = np.cumsum(spec.post_obs, axis=1)
        self._pre_trans_cum = np.cumsum(spec.pre_trans, axis=1)
        self._post_trans_cum = np.cumsum(spec.post_trans, axis=1)
        self._stationary_cum = np.cumsum(spec.stationary)
        # one-step conditional observation pmf given the pre-change state
        self.post_conditional = spec.post_trans @ spec.post_obs

    @property
    def state_count(self) -> int:
        return self.spec.state_count

    @property
    def obs_count(self) -> int:
        return self.spec.obs_count

    # densities (pmfs evaluated at integer symbols) -------------------------
    def pre_obs_density(self, x):
        return self.spec.pre_obs[np.asarray(x, dtype=int)]

    def post_obs_density(self, x, z):
        return self.spec.post_obs[np.asarray(z, dtype=int), np.asarray(x, dtype=int)]

    def pre_transition(self, z_next, z_prev):
        return self.spec.pre_trans[np.asarray(z_prev, dtype=int), np.asarray(z_next, dtype=int)]

    def post_transition(self, z_next, z_prev):
        return self.spec.post_trans[np.asarray(z_prev, dtype=int), np.asarray(z_next, dtype=int)]

    def stationary_density(self, z):
        return self.spec.stationary[np.asarray(z, dtype=int)]

    # samplers --------------------------------------------------------------
    @staticmethod
    def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(cum, u, side="right").astype(np.int64)
        return np.minimum(idx, len(cum) - 1)

    @staticmethod
    def _draw_rows(cum_rows: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        idx = (u[:, None] >= cum_rows[rows]).sum(axis=1).astype(np.int64)
        return np.minimum(idx, cum_rows.shape[1] - 1)

    def sample_stationary(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self._draw(self._stationary_cum, gen.random(n))

    def step_states(self, z, gen: np.random.Generator, post: bool) -> np.ndarray:
        z = np.asarray(z, dtype=int)
        cum = self._post_trans_cum if post else self._pre_trans_cum
        return self._draw_rows(cum, z, gen.random(z.shape[0]))

    def sample_obs_pre(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self._draw(self._pre_obs_cum, gen.random(n))

    def sample_obs_post(self, z, gen: np.random.Generator) -> np.ndarray:
        z = np.asarray(z, dtype=int)
        return self._draw_rows(self._post_obs_cum, z, gen.random(z.shape[0]))

    # exact "quadrature" ----------------------------------------------------
    def stationary_nodes(self, order: int = 0):
        del order
        return np.arange(self.state_count), self.spec.stationary.copy()

    def post_transition_nodes(self, z_prev: int, order: int = 0):
        del order
        return np.arange(self.state_count), self.spec.post_trans[int(z_prev)].copy()


ChangeModel = Union[GaussianAr1Model, DiscreteChangeModel]


def make_gaussian_ar1(params: GaussianAr1Params) -> GaussianAr1Model:
    """Construct and validate the Gaussian AR(1) change model."""
    return GaussianAr1Model(params)


def make_discrete(spec: DiscreteModel) -> DiscreteChangeModel:
    """Construct and validate a finite change model."""
    return DiscreteChangeModel(spec)


def post_conditional_obs_density(model: ChangeModel, z_prev):
    """One-step observation law after a change, given the last pre-change state.

    Marginalizes the first post-change state transition: for the Gaussian
    model this is Normal((1-alpha) mu + alpha z_prev, 1 + sigma2); for
    discrete models it is the exact row of ``post_trans @ post_obs``.
    """
    if model.is_discrete:
        return model.post_conditional[int(z_prev)]
    mean = float(model._transition_mean(z_prev))
    return Normal1D(mean, 1.0 + model.params.sigma2)


def sample_trajectory(
    model: ChangeModel,
    tau: ChangeTime,
    horizon: int,
    gen: np.random.Generator,
) -> TrajectoryRecord:
    """Simulate states z_0..z_H and observations xi_1..xi_H with a change at tau.

    ``tau = math.inf`` produces a purely nominal trajectory.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not (tau == math.inf or (isinstance(tau, (int, np.integer)) and tau >= 0)):
        raise ValueError(f"tau must be a nonnegative integer or math.inf, got {tau}")
    states = [model.sample_stationary(gen, 1)]
    observations = []
    for t in range(1, horizon + 1):
        post = t > tau
        z = model.step_states(states[-1], gen, post=post)
        states.append(z)
        if post:
            observations.append(model.sample_obs_post(z, gen))
        else:
            observations.append(model.sample_obs_pre(gen, 1))
    return TrajectoryRecord(
        tau=tau,
        observations=np.concatenate(observations),
        states=np.concatenate(states),
        horizon=horizon,
    )


def simulate_observations(
    model: ChangeModel,
    tau: ChangeTime,
    horizon: int,
    trials: int,
    gen: np.random.Generator,
):
    """Batch simulation: (trials, horizon) observations plus final states.

    Returns ``(observations, states_at_horizon)``; the per-trial logic matches
    :func:`sample_trajectory` step for step but is vectorized across trials.
    """
    z = model.sample_stationary(gen, trials)
    width = horizon
    if model.is_discrete:
        obs = np.empty((trials, width), dtype=np.int64)
    else:
        obs = np.empty((trials, width), dtype=float)
    for t in range(1, horizon + 1):
        post = t > tau
        z = model.step_states(z, gen, post=post)
        if post:
            obs[:, t - 1] = model.sample_obs_post(z, gen)
        else:
            obs[:, t - 1] = model.sample_obs_pre(gen, trials)
    return obs, z
