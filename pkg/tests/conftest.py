import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from hnc.configuration import Configuration
from hnc.sampling import random_in_stratum

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def config_in_stratum(seed: int, n_lo: int = 2, n_hi: int = 8, dims=(2, 3), radius: float = 1.0):
    """A random valid configuration in the interior of its 2-means stratum, with its tree."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    d = int(rng.choice(dims))
    return random_in_stratum(rng, n, d, radius)


def field_case(seed: int, n_lo: int = 2, n_hi: int = 8, dims=(2, 3)):
    """(goal config y, tree, x) with y and x both in the closed stratum of the tree."""
    from hnc.clustering import stratum_contains
    rng = np.random.default_rng(seed)
    y, tree = config_in_stratum(int(rng.integers(2**32)), n_lo, n_hi, dims)
    while True:
        x, tx = config_in_stratum(int(rng.integers(2**32)), y.n, y.n, (y.dim,))
        # Relabel x's hierarchy onto y's tree by sampling until x supports it.
        if stratum_contains(x, tree):
            return y, tree, x.positions
        perm = rng.permutation(y.n)
        xp = x.positions[perm]
        if stratum_contains(xp, tree):
            return y, tree, xp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def line(*xs, radius=0.0):
    pos = np.array([[float(v), 0.0] for v in xs])
    return Configuration(pos, np.full(len(xs), radius))


def portal_case(seed: int, n_lo: int = 3, n_hi: int = 8, dims=(2, 3), alpha: float = 0.2):
    """(config, PortalContext): config in the closed stratum of sigma, tau a random NNI neighbor."""
    from hnc.hierarchy import nni_neighbors
    from hnc.portal import PortalContext
    rng = np.random.default_rng(seed)
    config, sigma = config_in_stratum(int(rng.integers(2**32)), n_lo, n_hi, dims)
    nbrs = nni_neighbors(sigma)
    tau = nbrs[int(rng.integers(len(nbrs)))]
    return config, PortalContext(sigma, tau, alpha)
