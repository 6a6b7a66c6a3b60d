"""Discrete least-favorable prior: fixed point vs enumeration oracle.

The oracle enumerates every calibrated one-step detector with at most one
randomized symbol (the vertices of the feasible set) and solves the
prior-side linear program; it shares no code with the multiplicative-weights
fixed point beyond the model arrays.
"""

import numpy as np
import pytest

from hmmcd.model import make_discrete
from hmmcd.numerics import rng_stream
from hmmcd.shewhart import (
    EqualizationError,
    build_policy,
    enumerate_calibrated_detectors,
    per_state_detection,
    solve_worst_case_prior,
    worst_prior_oracle,
)
from util import random_discrete_spec

# seeds whose random 3x4 models admit the boundary-randomized equalizer
# (single-state least-favorable support); gamma varies with the seed
CONVERGING_SEEDS = [(0, 5.0), (1, 7.0), (2, 9.0), (3, 11.0), (4, 13.0), (5, 15.0)]


@pytest.mark.parametrize("seed,gamma", CONVERGING_SEEDS)
def test_solver_matches_oracle(seed, gamma):
    model = make_discrete(random_discrete_spec(rng_stream(1234, seed)))
    prior, cal = solve_worst_case_prior(model, gamma)
    oracle, best_competitor = worst_prior_oracle(model, gamma)
    assert set(prior.support) == set(oracle.support)
    assert np.max(np.abs(np.sort(prior.weights) - np.sort(oracle.weights))) <= 1e-9
    assert abs(prior.beta2 - oracle.beta2) <= 1e-12
    assert best_competitor <= prior.beta2 + 1e-12
    assert cal.residual <= 1e-9


def test_symmetric_pair_support(symmetric_discrete_model):
    prior, _ = solve_worst_case_prior(symmetric_discrete_model, 6.0)
    assert set(prior.support) == {0, 1}
    assert np.allclose(prior.weights, [0.5, 0.5], atol=1e-12)
    oracle, best = worst_prior_oracle(symmetric_discrete_model, 6.0)
    assert set(oracle.support) == {0, 1}
    assert np.max(np.abs(np.sort(prior.weights) - np.sort(oracle.weights))) <= 1e-9
    assert abs(prior.beta2 - oracle.beta2) <= 1e-12
    assert best <= prior.beta2 + 1e-12
    # the boundary-randomized test equalizes the two states exactly
    pol2 = build_policy(symmetric_discrete_model, 2, 6.0, prior=prior)
    d = [per_state_detection(symmetric_discrete_model, pol2, z) for z in (0, 1)]
    assert abs(d[0] - d[1]) <= 1e-12


def test_equalization_conditions_hold(discrete_model):
    gamma = 8.0
    prior, _ = solve_worst_case_prior(discrete_model, gamma)
    pol2 = build_policy(discrete_model, 2, gamma, prior=prior)
    detections = np.array(
        [per_state_detection(discrete_model, pol2, z) for z in range(discrete_model.state_count)]
    )
    on = np.isin(np.arange(discrete_model.state_count), prior.support)
    assert np.max(np.abs(detections[on] - prior.beta2)) <= 1e-9
    if np.any(~on):
        assert np.min(detections[~on]) >= prior.beta2 - 1e-9


def test_nonconvergent_model_raises():
    # seed 13 in this family needs a two-state support with unequal
    # per-symbol randomization, which the boundary-randomized test cannot
    # realize; the solver must fail loudly with its residual history
    model = make_discrete(random_discrete_spec(rng_stream(1234, 13)))
    with pytest.raises(EqualizationError) as err:
        solve_worst_case_prior(model, 31.0, max_iter=2000)
    assert len(err.value.residual_trajectory) == 2000


def test_detector_enumeration_is_calibrated(discrete_model):
    gamma = 8.0
    detectors = enumerate_calibrated_detectors(discrete_model, gamma)
    assert len(detectors) > 0
    masses = detectors @ discrete_model.spec.pre_obs
    assert np.max(np.abs(masses - 1.0 / gamma)) < 1e-12
    fractional = np.sum((detectors > 1e-12) & (detectors < 1 - 1e-12), axis=1)
    assert np.all(fractional <= 1)


@pytest.mark.parametrize("seed,gamma", CONVERGING_SEEDS[:3])
def test_no_competitor_beats_beta2(seed, gamma):
    model = make_discrete(random_discrete_spec(rng_stream(1234, seed)))
    prior, _ = solve_worst_case_prior(model, gamma)
    detectors = enumerate_calibrated_detectors(model, gamma)
    worst_case = np.min(model.post_conditional @ detectors.T, axis=0)
    assert float(np.max(worst_case)) <= prior.beta2 + 1e-12
