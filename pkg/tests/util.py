from fractions import Fraction

import numpy as np

from hmmcd.games import exact_stationary
from hmmcd.model import DiscreteModel


def random_discrete_spec(gen, n_states=3, n_obs=4):
    """Random stochastic model with an exactly stationary initial law."""

    def pmf(size):
        ks = gen.integers(1, 9, size=size)
        return [Fraction(int(k), int(ks.sum())) for k in ks]

    pre_trans = [pmf(n_states) for _ in range(n_states)]
    stationary = exact_stationary(pre_trans)
    return DiscreteModel(
        pre_obs=np.array([float(v) for v in pmf(n_obs)]),
        post_obs=np.array([[float(v) for v in pmf(n_obs)] for _ in range(n_states)]),
        pre_trans=np.array([[float(v) for v in row] for row in pre_trans]),
        post_trans=np.array([[float(v) for v in pmf(n_states)] for _ in range(n_states)]),
        stationary=np.array([float(v) for v in stationary]),
    )
