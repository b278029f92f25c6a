import numpy as np
import pytest

from scalht.hankel import HankelSpace, observe, weight_D
from scalht.signals import gen_signal, random_model
from scalht.tensor_core import TuckerFactors


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_factors(rng, n1, n2, s, r) -> TuckerFactors:
    return TuckerFactors(
        cgauss(rng, n1, r), cgauss(rng, n2, r), cgauss(rng, s, r), cgauss(rng, r, r, r)
    )


def exact_observed(n, s, r, m, seed, mode="without_replacement"):
    """Ground-truth model, its space, weighted observations, and X*."""
    rng = np.random.default_rng(seed)
    model = random_model(n, s, r, rng)
    X = gen_signal(model)
    from scalht.hankel import default_space

    space = default_space(n, s)
    obs = observe(weight_D(X, space, "forward"), space, m=m, mode=mode, rng_seed=rng)
    return space, obs, X


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
