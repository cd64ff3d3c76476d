import numpy as np
import pytest

from billiardq import dynamics, geometry

ENSEMBLE_DT = 0.05
ENSEMBLE_T = 1.0e4
ENSEMBLE_SEGMENT = 16384


@pytest.fixture(scope="session")
def unit_disk():
    return geometry.disk(1.0)


@pytest.fixture(scope="session")
def ensemble_series(deformed_circle):
    """64 long unit-speed trajectories of the r^2 observable (shared; this is
    the most expensive fixture in the suite)."""
    states = dynamics.random_states(deformed_circle, 64, seed=42)
    trajs = dynamics.evolve_ensemble(states, deformed_circle, ENSEMBLE_T)
    series = [dynamics.observable_series(t, ENSEMBLE_DT, ENSEMBLE_T)
              for t in trajs]
    return trajs, series


@pytest.fixture(scope="session")
def spectral_estimate(ensemble_series):
    _, series = ensemble_series
    return dynamics.spectral_density(series, ENSEMBLE_DT, ENSEMBLE_SEGMENT)


@pytest.fixture(scope="session")
def deformed_circle():
    shape = geometry.RadialShape(cos_coeffs=(1.0, 0.0, 0.05, 0.03))
    return geometry.Domain(shape=shape, bc=geometry.BoundaryCondition.dirichlet())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
