from fractions import Fraction

import numpy as np
import pytest

from hmmcd.adversary import InfoModel
from hmmcd.games import (
    FiniteGame,
    FirstSymbolDetector,
    GameSizeError,
    MemorylessDetector,
    criteria_bridge,
    exact_stationary,
    lemma1_enumerate,
    random_game,
)
from hmmcd.model import make_discrete
from hmmcd.numerics import rng_stream
from hmmcd.shewhart import beta1, build_policy, solve_worst_case_prior
from util import random_discrete_spec

HALF = Fraction(1, 2)


def _base_game(info=InfoModel.STATE, horizon=3, detector=None, reward="detect"):
    return FiniteGame(
        pre_obs=[Fraction(3, 4), Fraction(1, 4)],
        post_obs=[[HALF, HALF], [Fraction(1, 4), Fraction(3, 4)]],
        pre_trans=[[HALF, HALF], [HALF, HALF]],
        post_trans=[[Fraction(2, 3), Fraction(1, 3)], [Fraction(1, 3), Fraction(2, 3)]],
        stationary=[HALF, HALF],
        horizon=horizon,
        detector=detector or FirstSymbolDetector(1),
        info=info,
        reward=reward,
    )


class TestLemma1:
    def test_detect_mode_exact(self):
        report = lemma1_enumerate(_base_game())
        assert isinstance(report.lhs, Fraction)
        assert report.lhs == report.rhs
        assert report.mode == "inf"
        assert report.attaining  # the attaining (time, history) pairs are reported

    def test_delay_mode_exact(self):
        game = _base_game(detector=FirstSymbolDetector(1, force_stop_at=3), reward="delay")
        report = lemma1_enumerate(game)
        assert report.mode == "sup"
        assert report.lhs == report.rhs
        assert report.lhs >= 1  # a detection lag is at least one step

    def test_delay_requires_complete_detector(self):
        game = _base_game(detector=FirstSymbolDetector(1), reward="delay")
        with pytest.raises(ValueError, match="stops by the horizon"):
            lemma1_enumerate(game)

    def test_independent_side_information_collapses(self):
        # a private coin stream cannot beat knowing nothing at all
        rich = _base_game(info=InfoModel.INDEPENDENT)
        rich.u_pmf = [HALF, HALF]
        trivial = _base_game(info=InfoModel.INDEPENDENT)
        a, b = lemma1_enumerate(rich), lemma1_enumerate(trivial)
        assert a.rhs == b.rhs
        assert a.n_rules > b.n_rules  # richer trees, same value

    def test_rule_count_closed_form(self):
        # binary side-symbol tree, change times {0,1,2}: 26 antichains incl. empty
        report = lemma1_enumerate(_base_game())
        assert report.n_rules == 25

    def test_randomized_corpus(self):
        gen = rng_stream(7, 77)
        infos = [InfoModel.STATE, InfoModel.OBSERVATIONS,
                 InfoModel.INDEPENDENT, InfoModel.BOTH]
        for i in range(24):
            info = infos[i % 4]
            reward = "delay" if i % 5 == 4 else "detect"
            if info is InfoModel.BOTH:
                n_obs, n_states, horizon = 2, 2, 2
            elif i % 3 == 2:
                n_obs, n_states, horizon = 3, 2, 2
            else:
                n_obs, n_states, horizon = 2, 2, 3
            game = random_game(gen, n_obs=n_obs, n_states=n_states, horizon=horizon,
                               info=info, reward=reward, change_states=bool(i % 2))
            if info is InfoModel.INDEPENDENT:
                game.u_pmf = [HALF, HALF]
            report = lemma1_enumerate(game)
            assert report.exact, f"game {i}: lhs={report.lhs} rhs={report.rhs}"

    def test_size_cap(self):
        game = _base_game()
        game.path_cap = 10
        with pytest.raises(GameSizeError):
            lemma1_enumerate(game)


@pytest.fixture(scope="module")
def discrete_setup():
    spec = random_discrete_spec(rng_stream(1234, 0))
    model = make_discrete(spec)
    gamma = 8.0
    prior, _ = solve_worst_case_prior(model, gamma)
    pol1 = build_policy(model, 1, gamma)
    pol2 = build_policy(model, 2, gamma, prior=prior)

    def game_for(pol):
        return FiniteGame(
            pre_obs=list(spec.pre_obs),
            post_obs=[list(r) for r in spec.post_obs],
            pre_trans=[list(r) for r in spec.pre_trans],
            post_trans=[list(r) for r in spec.post_trans],
            stationary=list(spec.stationary),
            horizon=2,
            detector=MemorylessDetector(tuple(pol.stop_probs)),
            info=InfoModel.STATE,
        )

    return model, prior, pol1, pol2, game_for


class TestCriteriaBridge:

    def test_s2_attains_beta2_under_state_access(self, discrete_setup):
        model, prior, _, pol2, game_for = discrete_setup
        report = criteria_bridge(game_for(pol2))
        assert abs(report.p_iii - prior.beta2) <= 1e-12
        assert abs(report.p_iv - prior.beta2) <= 1e-12
        assert report.ordering_ok

    def test_s1_attains_beta1_without_state_access(self, discrete_setup):
        model, _, pol1, _, game_for = discrete_setup
        report = criteria_bridge(game_for(pol1))
        b1 = beta1(model, pol1)
        assert abs(report.p_i - b1) <= 1e-12
        assert abs(report.p_ii - b1) <= 1e-12
        assert report.ordering_ok

    def test_memoryless_detector_equalizes_criteria_i_ii(self, discrete_setup):
        # with a history-free one-step rule, watching the observations adds
        # nothing for the change-imposing side
        _, _, pol1, _, game_for = discrete_setup
        report = criteria_bridge(game_for(pol1))
        assert abs(report.p_i - report.p_ii) <= 1e-12


class TestExactStationary:
    def test_matches_power_iteration(self):
        pre_trans = [[Fraction(4, 5), Fraction(1, 5)], [Fraction(2, 5), Fraction(3, 5)]]
        pi = exact_stationary(pre_trans)
        assert sum(pi) == 1
        v = np.array([0.5, 0.5])
        mat = np.array([[0.8, 0.2], [0.4, 0.6]])
        for _ in range(200):
            v = v @ mat
        assert np.max(np.abs(np.array([float(x) for x in pi]) - v)) < 1e-12
