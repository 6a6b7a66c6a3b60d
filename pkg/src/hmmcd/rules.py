"""Vectorized stopping rules for nominal-regime simulation.

A rule watches one observation per step for a batch of independent trials and
reports which trials stop.  ``reset`` sizes per-trial state, ``initial_stop``
implements the time-zero randomization device (stop before any observation),
and ``stop`` receives the observations of the still-active trials together
with their original trial indices so stateful rules can update in place.
"""

from __future__ import annotations

import numpy as np


class StoppingRule:
    name = "rule"

    def reset(self, n_trials: int, gen: np.random.Generator) -> None:
        del n_trials, gen

    def initial_stop(self, n_trials: int, gen: np.random.Generator) -> np.ndarray:
        del gen
        return np.zeros(n_trials, dtype=bool)

    def stop(self, t: int, obs: np.ndarray, idx: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class PolicyRule(StoppingRule):
    """Adapter: a calibrated Shewhart policy as a stopping rule."""

    def __init__(self, policy):
        self.policy = policy
        self.name = f"shewhart_s{policy.variant}"

    def stop(self, t, obs, idx, gen):
        del t, idx
        return self.policy.stop_mask(obs, gen)


class OneSidedRule(StoppingRule):
    """Stop at the first observation >= c."""

    def __init__(self, c: float):
        self.c = float(c)
        self.name = f"one_sided(c={c:.4g})"

    def stop(self, t, obs, idx, gen):
        del t, idx, gen
        return obs >= self.c


class ShiftedTwoSidedRule(StoppingRule):
    """Stop at the first observation with |xi - shift| >= c."""

    def __init__(self, shift: float, c: float):
        self.shift = float(shift)
        self.c = float(c)
        self.name = f"two_sided(shift={shift:.4g},c={c:.4g})"

    def stop(self, t, obs, idx, gen):
        del t, idx, gen
        return np.abs(obs - self.shift) >= self.c


class FixedTimeRule(StoppingRule):
    """Stop deterministically at time k."""

    def __init__(self, k: int):
        self.k = int(k)
        self.name = f"fixed_time(k={k})"

    def stop(self, t, obs, idx, gen):
        del idx, gen
        return np.full(obs.shape[0], t >= self.k)


class TruncatedCusumRule(StoppingRule):
    """CUSUM on a log likelihood-ratio increment, stopped at W >= h.

    W_t = max(0, W_{t-1} + log_lr(xi_t)); truncation is enforced by the
    driving loop's horizon cap, not by the rule itself.
    """

    def __init__(self, log_lr, h: float):
        self.log_lr = log_lr
        self.h = float(h)
        self.name = f"cusum(h={h:.4g})"
        self._w = None

    def reset(self, n_trials, gen):
        del gen
        self._w = np.zeros(n_trials)

    def stop(self, t, obs, idx, gen):
        del t, gen
        w = np.maximum(self._w[idx] + self.log_lr(obs), 0.0)
        self._w[idx] = w
        return w >= self.h


class AlternatingThresholdRule(StoppingRule):
    """Two-sided |xi| rule whose threshold depends on the parity of t.

    Deliberately not an equalizer: the one-step stopping probability
    alternates between two values, so conditional detection probabilities
    at even and odd change times differ.
    """

    def __init__(self, c_odd: float, c_even: float):
        self.c_odd = float(c_odd)
        self.c_even = float(c_even)
        self.name = f"alternating(c_odd={c_odd:.4g},c_even={c_even:.4g})"

    def threshold_at(self, t: int) -> float:
        return self.c_odd if t % 2 == 1 else self.c_even

    def stop(self, t, obs, idx, gen):
        del idx, gen
        return np.abs(obs) >= self.threshold_at(t)


class TimeZeroRandomizedRule(StoppingRule):
    """Stop at time zero with probability p, otherwise delegate.

    Preserves E[L(xi_T)] / E[T] (the stopped value at T = 0 contributes
    zero to both numerator and denominator), so a rule with mean stopping
    time above gamma can be brought down to gamma exactly.
    """

    def __init__(self, base: StoppingRule, p: float):
        if not 0.0 <= p < 1.0:
            raise ValueError("time-zero stop probability must lie in [0, 1)")
        self.base = base
        self.p = float(p)
        self.name = f"{base.name}+zero(p={p:.4g})"

    def reset(self, n_trials, gen):
        self.base.reset(n_trials, gen)

    def initial_stop(self, n_trials, gen):
        return gen.random(n_trials) < self.p

    def stop(self, t, obs, idx, gen):
        return self.base.stop(t, obs, idx, gen)
