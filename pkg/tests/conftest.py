import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import random_discrete_spec  # noqa: E402

from hmmcd.model import DiscreteModel, GaussianAr1Params, make_discrete, make_gaussian_ar1  # noqa: E402

PAPER_ALPHA, PAPER_MU, PAPER_SIGMA2 = 0.5, 1.0, 0.5


@pytest.fixture(scope="session")
def paper_model():
    """The worked Gaussian AR(1) example: alpha=0.5, mu=1, sigma2=0.5."""
    return make_gaussian_ar1(GaussianAr1Params(PAPER_ALPHA, PAPER_MU, PAPER_SIGMA2))


@pytest.fixture(scope="session")
def discrete_model():
    """A fixed random 3-state / 4-symbol model (seed chosen arbitrarily;
    its least-favorable support happens to be a single state, so the
    fixed-point solver applies)."""
    from hmmcd.numerics import rng_stream

    return make_discrete(random_discrete_spec(rng_stream(1234, 0)))


@pytest.fixture(scope="session")
def symmetric_discrete_model():
    """Two states, three symbols, invariant under swapping the states together
    with reversing the symbols; the least-favorable prior is the uniform pair."""
    spec = DiscreteModel(
        pre_obs=[0.25, 0.5, 0.25],
        post_obs=[[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]],
        pre_trans=[[0.8, 0.2], [0.2, 0.8]],
        post_trans=[[0.7, 0.3], [0.3, 0.7]],
        stationary=[0.5, 0.5],
    )
    return make_discrete(spec)


@pytest.fixture(scope="session")
def atom_model():
    """One hidden state, two symbols: the likelihood ratio is purely atomic,
    so calibration must randomize on the boundary atom."""
    spec = DiscreteModel(
        pre_obs=[0.04, 0.96],
        post_obs=[[0.12, 0.88]],
        pre_trans=[[1.0]],
        post_trans=[[1.0]],
        stationary=[1.0],
    )
    return make_discrete(spec)
