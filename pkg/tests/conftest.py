import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_laplacian_euclid(fn, x, h=1e-3):
    """Central second differences of fn (points -> values) at the rows of x."""
    x = np.atleast_2d(x)
    d = x.shape[1]
    out = -2.0 * d * fn(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out = out + fn(x + e) + fn(x - e)
    return out / (h * h)


def fd_gradient_euclid(fn, x, h=1e-5):
    x = np.atleast_2d(x)
    d = x.shape[1]
    g = np.empty_like(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[:, i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g
