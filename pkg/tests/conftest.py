import numpy as np
import pytest

from chaplygin import ReducedState, SphereParams
from chaplygin.so3 import exp_rotation


@pytest.fixture
def params():
    """Canonical test parameters."""
    return SphereParams(1.0, 1.0, (1.0, 2.0, 3.0))


@pytest.fixture
def uniform_params():
    """Fully symmetric inertia, used for closed-form checks."""
    return SphereParams(1.0, 1.0, (1.0, 1.0, 1.0))


@pytest.fixture
def free_params():
    """Massless limit: no rolling coupling, free rigid body."""
    return SphereParams(0.0, 1.0, (1.0, 2.0, 3.0))


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_state(rng, k_scale=3.0):
    return ReducedState(rng.uniform(-k_scale, k_scale, 3), random_unit(rng))


def random_rotation(rng, scale=2.0):
    return exp_rotation(rng.normal(scale=scale, size=3))
