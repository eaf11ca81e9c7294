import numpy as np
import pytest

from greendyn import (EmpiricalMeasure, backward_sample, chebyshev_map,
                      lattes_from_duplication, power_map, quadratic_map)

# Moderate-size clouds shared across test modules.  Session scope keeps
# the sampling cost paid once; everything downstream treats them as
# read-only.

_CLOUD_SPECS = {
    "power2": (lambda: power_map(2), 20),
    "power3": (lambda: power_map(3), 21),
    "cheb2": (lambda: chebyshev_map(2), 22),
    "quad_025": (lambda: quadratic_map(0.25), 23),
    "lattes_4_0": (lambda: lattes_from_duplication(4.0), 24),
}


@pytest.fixture(scope="session")
def shared_clouds():
    out = {}
    for name, (maker, seed) in _CLOUD_SPECS.items():
        m = maker()
        out[name] = (m, backward_sample(m, count=800, chains=25, seed=seed))
    return out


@pytest.fixture(scope="session")
def power2_cloud(shared_clouds):
    return shared_clouds["power2"]


@pytest.fixture(scope="session")
def cheb2_cloud(shared_clouds):
    return shared_clouds["cheb2"]


@pytest.fixture(scope="session")
def quad_cloud(shared_clouds):
    return shared_clouds["quad_025"]


@pytest.fixture(scope="session")
def lattes_cloud(shared_clouds):
    return shared_clouds["lattes_4_0"]


def synthetic_measure(z, seed=0, chain_count=1):
    """Wrap raw affine samples into an equal-weight measure object."""
    z0 = np.asarray(z, dtype=complex).copy()
    z1 = np.ones_like(z0)
    big = np.abs(z0) > 1.0
    z1[big] = 1.0 / z0[big]
    z0[big] = 1.0
    n = len(z0)
    chain_ids = np.arange(n) % chain_count
    order = np.argsort(chain_ids, kind="stable")
    return EmpiricalMeasure(z0[order], z1[order], np.full(n, 1.0 / n),
                            chain_ids[order], chain_count, 0, seed)
