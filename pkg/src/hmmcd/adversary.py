"""Simulation of the detection game against a change-imposing side.

The change-imposing side watches its own data stream and picks the change
time; what it may watch is its information model: nothing relevant
(independent), the observations, the hidden state, or both.  Causality is
enforced structurally: a trigger rule declares which coordinates it reads
and the policy constructor refuses mismatched combinations, so every
simulated change time is a stopping time on the declared filtration.

Monte-Carlo outputs are deterministic for a fixed (seed, workers) pair:
trials are partitioned across per-worker generator streams and reduced in
worker order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .model import ChangeModel
from .numerics import norm_cdf, rng_stream
from .rules import PolicyRule, StoppingRule
from .shewhart import ShewhartPolicy, per_state_detection, worst_state


class DegenerateConditioningError(RuntimeError):
    """Too few trials survive the conditioning event for a usable estimate."""


class CapTooSmallError(RuntimeError):
    """More than 0.1% of trials hit the simulation horizon."""


class CausalityError(TypeError):
    """A trigger rule asked for coordinates its information model forbids."""


class InfoModel(Enum):
    INDEPENDENT = "independent"
    OBSERVATIONS = "observations_only"
    STATE = "state_only"
    BOTH = "both"


_PERMITTED = {
    InfoModel.INDEPENDENT: frozenset(),
    InfoModel.OBSERVATIONS: frozenset({"obs"}),
    InfoModel.STATE: frozenset({"state"}),
    InfoModel.BOTH: frozenset({"obs", "state"}),
}


class TriggerRule:
    reads: frozenset = frozenset()


@dataclass(frozen=True)
class StateBandTrigger(TriggerRule):
    """Impose the change the first time the state enters a band around z_star.

    Continuous states trigger on |z_t - z_star| <= eps; discrete states on
    exact equality.
    """

    z_star: float
    eps: float = 0.01
    reads: frozenset = frozenset({"state"})

    def hit(self, z: np.ndarray, discrete: bool) -> np.ndarray:
        if discrete:
            return np.asarray(z) == int(self.z_star)
        return np.abs(np.asarray(z, dtype=float) - self.z_star) <= self.eps


@dataclass(frozen=True)
class FixedTimeTrigger(TriggerRule):
    """Impose the change at a fixed, data-independent time (0 = immediately)."""

    tau: int
    reads: frozenset = frozenset()


@dataclass(frozen=True)
class GeometricTrigger(TriggerRule):
    """Impose the change at an independent geometric time: P(tau = t) = p (1-p)^t."""

    p: float
    reads: frozenset = frozenset()


@dataclass(frozen=True)
class ObsThresholdTrigger(TriggerRule):
    """Impose the change the first time an observation reaches a threshold."""

    c: float
    reads: frozenset = frozenset({"obs"})

    def hit(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs, dtype=float) >= self.c


@dataclass(frozen=True)
class AdversaryPolicy:
    info_model: InfoModel
    rule: TriggerRule

    def __post_init__(self):
        allowed = _PERMITTED[self.info_model]
        if not self.rule.reads <= allowed:
            raise CausalityError(
                f"rule reads {sorted(self.rule.reads)} but information model "
                f"{self.info_model.value} only permits {sorted(allowed)}"
            )


def adversary_tau(policy: AdversaryPolicy, observations=None, states=None,
                  gen: Optional[np.random.Generator] = None,
                  horizon: Optional[int] = None, discrete: bool = False):
    """Scalar reference implementation of the change decision.

    ``states`` holds z_1..z_H (states visible from time 1 on), ``observations``
    xi_1..xi_H.  Returns the first time the rule triggers, or None within the
    horizon.  Only the coordinates permitted by the information model are
    consulted; the rest may be omitted entirely.
    """
    rule = policy.rule
    if isinstance(rule, FixedTimeTrigger):
        if horizon is not None and rule.tau > horizon:
            return None
        return rule.tau
    if isinstance(rule, GeometricTrigger):
        if gen is None:
            raise ValueError("geometric trigger needs a generator")
        tau = int(gen.geometric(rule.p)) - 1  # support {0, 1, ...}
        if horizon is not None and tau > horizon:
            return None
        return tau
    if isinstance(rule, StateBandTrigger):
        z = np.asarray(states)
        hits = np.flatnonzero(rule.hit(z, discrete))
        return int(hits[0]) + 1 if hits.size else None
    if isinstance(rule, ObsThresholdTrigger):
        hits = np.flatnonzero(rule.hit(np.asarray(observations)))
        return int(hits[0]) + 1 if hits.size else None
    raise TypeError(f"unsupported trigger rule {type(rule).__name__}")


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A simulated probability or mean with its sampling uncertainty."""

    value: float
    std_error: float
    trials: int
    seed: int
    conditioning_count: int
    extra: dict = field(default_factory=dict)


def _split_trials(trials: int, workers: int) -> Sequence[int]:
    base = trials // workers
    sizes = [base + (1 if i < trials % workers else 0) for i in range(workers)]
    return [n for n in sizes if n > 0]


def _band_bias_bound(model, policy: ShewhartPolicy, trigger: StateBandTrigger) -> float:
    """Worst deviation of per-state detection inside the trigger band from its
    value at the target state (zero for discrete exact triggers)."""
    if model.is_discrete:
        return 0.0
    center = per_state_detection(model, policy, trigger.z_star)
    candidates = [trigger.z_star - trigger.eps, trigger.z_star + trigger.eps]
    z_min = worst_state(model, policy)
    if z_min is not None and abs(z_min - trigger.z_star) < trigger.eps:
        candidates.append(z_min)
    worst = max(abs(per_state_detection(model, policy, z) - center) for z in candidates)
    return float(worst)


def _post_step_detect(model, policy, z_tau, gen):
    z_next = model.step_states(z_tau, gen, post=True)
    obs = model.sample_obs_post(z_next, gen)
    return policy.stop_mask(obs, gen)


def _trajectory_kernel(model, policy, adversary, n, gen, cap):
    """Literal protocol: joint simulation, false alarms drop the trial, the
    trigger rule picks tau, detection is checked one step later."""
    rule = adversary.rule
    z = model.sample_stationary(gen, n)
    if isinstance(rule, FixedTimeTrigger):
        tau_fixed = np.full(n, rule.tau)
    elif isinstance(rule, GeometricTrigger):
        tau_fixed = gen.geometric(rule.p, n) - 1
    else:
        tau_fixed = None

    detected = 0
    survivors = 0
    false_alarms = 0
    no_trigger = 0
    alive = np.arange(n)

    if tau_fixed is not None:
        ready = alive[tau_fixed == 0]
        if ready.size:
            detected += int(_post_step_detect(model, policy, z[ready], gen).sum())
            survivors += ready.size
        alive = alive[tau_fixed[alive] > 0]

    t = 0
    while alive.size and t < cap:
        t += 1
        z_alive = model.step_states(z[alive], gen, post=False)
        z[alive] = z_alive
        obs = model.sample_obs_pre(gen, alive.size)
        alarm = policy.stop_mask(obs, gen)
        false_alarms += int(alarm.sum())
        alive = alive[~alarm]
        z_alive = z[alive]
        if isinstance(rule, StateBandTrigger):
            hit = rule.hit(z_alive, model.is_discrete)
        elif isinstance(rule, ObsThresholdTrigger):
            hit = rule.hit(obs[~alarm])
        else:
            hit = tau_fixed[alive] == t
        fired = alive[hit]
        if fired.size:
            detected += int(_post_step_detect(model, policy, z[fired], gen).sum())
            survivors += fired.size
        alive = alive[~hit]
    no_trigger += alive.size
    return detected, survivors, false_alarms, no_trigger


def _conditioned_kernel(model, policy, trigger: StateBandTrigger, n, gen):
    """Exact factorization for state triggers.

    Pre-change observations are independent of the state path, so surviving
    false alarms up to tau is independent of the state at tau and the
    conditioning cancels from the one-step detection probability.  The state
    at the trigger time lies in the band; it is drawn from the stationary law
    restricted to the band (discrete: the target state itself), and any
    within-band placement error is covered by the reported bias bound.
    """
    if model.is_discrete:
        z_tau = np.full(n, int(trigger.z_star), dtype=np.int64)
    else:
        from scipy.special import ndtri

        mean, sd = model.stationary_mean, math.sqrt(model.stationary_var)
        lo = norm_cdf((trigger.z_star - trigger.eps - mean) / sd)
        hi = norm_cdf((trigger.z_star + trigger.eps - mean) / sd)
        u = lo + (hi - lo) * gen.random(n)
        u = np.clip(u, 1e-300, 1.0 - 1e-16)
        z_tau = mean + sd * ndtri(u)
    detect = _post_step_detect(model, policy, z_tau, gen)
    return int(detect.sum()), n


def estimate_worst_detection(model: ChangeModel, policy: ShewhartPolicy,
                             adversary: AdversaryPolicy, trials: int, seed: int,
                             mode: str = "auto", horizon_cap: int = 100_000,
                             workers: int = 1, min_survivors: int = 100) -> MonteCarloEstimate:
    """Estimate P(T = tau + 1 | T > tau) for the adversary's change time.

    ``mode`` selects the protocol for state triggers: "trajectory" simulates
    the joint path literally; "conditioned" uses the exact independence
    factorization (see ``_conditioned_kernel``), which is the only feasible
    route when the band is essentially unreachable within the horizon;
    "auto" picks by the band's stationary mass.
    """
    if trials < 10_000:
        raise ValueError("worst-detection estimates need at least 10^4 trials")
    rule = adversary.rule
    is_state = isinstance(rule, StateBandTrigger)
    if mode == "auto":
        if is_state and not model.is_discrete:
            mean, sd = model.stationary_mean, math.sqrt(model.stationary_var)
            band_mass = float(
                norm_cdf((rule.z_star + rule.eps - mean) / sd)
                - norm_cdf((rule.z_star - rule.eps - mean) / sd)
            )
            mode = "trajectory" if band_mass * horizon_cap >= 20.0 else "conditioned"
        else:
            mode = "trajectory"
    if mode == "conditioned" and not is_state:
        raise ValueError("conditioned mode applies to state-band triggers only")

    detected = survivors = false_alarms = no_trigger = 0
    for wid, n in enumerate(_split_trials(trials, workers)):
        gen = rng_stream(seed, wid)
        if mode == "conditioned":
            d, s = _conditioned_kernel(model, policy, rule, n, gen)
            detected += d
            survivors += s
        else:
            d, s, fa, nt = _trajectory_kernel(model, policy, adversary, n, gen, horizon_cap)
            detected += d
            survivors += s
            false_alarms += fa
            no_trigger += nt
    if survivors < min_survivors:
        raise DegenerateConditioningError(
            f"only {survivors} trials survived conditioning (< {min_survivors}); "
            f"false alarms {false_alarms}, never triggered {no_trigger}"
        )
    p = detected / survivors
    se = math.sqrt(p * (1.0 - p) / survivors)
    extra = {"mode": mode, "false_alarms": false_alarms, "no_trigger": no_trigger}
    if is_state:
        extra["bias_bound"] = _band_bias_bound(model, policy, rule)
    return MonteCarloEstimate(
        value=p, std_error=se, trials=trials, seed=seed,
        conditioning_count=survivors, extra=extra,
    )


def estimate_arl(model: ChangeModel, policy: ShewhartPolicy, trials: int,
                 horizon_cap: int, seed: int, workers: int = 1) -> MonteCarloEstimate:
    """Mean time to alarm on purely nominal trajectories."""
    if horizon_cap < 20 * policy.gamma:
        raise ValueError("horizon cap must be at least 20 * gamma")
    times = np.empty(trials)
    pos = 0
    truncated = 0
    for wid, n in enumerate(_split_trials(trials, workers)):
        gen = rng_stream(seed, wid)
        t_block = np.full(n, horizon_cap, dtype=float)
        active = np.arange(n)
        t = 0
        while active.size and t < horizon_cap:
            t += 1
            obs = model.sample_obs_pre(gen, active.size)
            mask = policy.stop_mask(obs, gen)
            t_block[active[mask]] = t
            active = active[~mask]
        truncated += active.size
        times[pos:pos + n] = t_block
        pos += n
    if truncated > 0.001 * trials:
        raise CapTooSmallError(
            f"{truncated} of {trials} trials hit the horizon cap {horizon_cap}"
        )
    value = float(times.mean())
    se = float(times.std(ddof=1) / math.sqrt(trials))
    return MonteCarloEstimate(
        value=value, std_error=se, trials=trials, seed=seed,
        conditioning_count=trials, extra={"truncated": truncated},
    )


@dataclass(frozen=True)
class EqualizerReport:
    times: tuple
    estimates: tuple
    std_errors: tuple
    survivors: tuple
    max_pairwise_z: float
    consistent: bool
    reference: Optional[float] = None
    reference_consistent: Optional[bool] = None


def equalizer_check(model: ChangeModel, detector, times: Sequence[int], trials: int,
                    seed: int, reference: Optional[float] = None,
                    workers: int = 1, min_survivors: int = 100) -> EqualizerReport:
    """Estimate P_t(T = t+1 | T > t) at several fixed change times and test
    whether the values are mutually consistent (the equalizer property).

    ``detector`` is a Shewhart policy or any :class:`StoppingRule`; rules see
    true 1-based times, so time-varying negative controls behave faithfully.
    """
    rule = detector if isinstance(detector, StoppingRule) else PolicyRule(detector)
    estimates, ses, surv = [], [], []
    for k, t_change in enumerate(times):
        detected = survivors = 0
        for wid, n in enumerate(_split_trials(trials, workers)):
            gen = rng_stream(seed, k * 1009 + wid)
            rule.reset(n, gen)
            z = model.sample_stationary(gen, n)
            active = np.arange(n)
            stopped0 = rule.initial_stop(n, gen)
            active = active[~stopped0]
            for t in range(1, t_change + 1):
                z[active] = model.step_states(z[active], gen, post=False)
                obs = model.sample_obs_pre(gen, active.size)
                mask = rule.stop(t, obs, active, gen)
                active = active[~mask]
            z_next = model.step_states(z[active], gen, post=True)
            obs = model.sample_obs_post(z_next, gen)
            mask = rule.stop(t_change + 1, obs, active, gen)
            detected += int(mask.sum())
            survivors += active.size
        if survivors < min_survivors:
            raise DegenerateConditioningError(
                f"change time {t_change}: only {survivors} survivors"
            )
        p = detected / survivors
        estimates.append(p)
        ses.append(math.sqrt(p * (1.0 - p) / survivors))
        surv.append(survivors)
    max_z = 0.0
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            denom = math.hypot(ses[i], ses[j])
            if denom > 0:
                max_z = max(max_z, abs(estimates[i] - estimates[j]) / denom)
    consistent = max_z <= 3.0
    ref_ok = None
    if reference is not None:
        ref_ok = all(
            abs(e - reference) <= 3.0 * s + 1e-12 for e, s in zip(estimates, ses)
        )
    return EqualizerReport(
        times=tuple(times),
        estimates=tuple(estimates),
        std_errors=tuple(ses),
        survivors=tuple(surv),
        max_pairwise_z=max_z,
        consistent=consistent,
        reference=reference,
        reference_consistent=ref_ok,
    )
