import numpy as np
import pytest

from cylflow.cylinder import make_cylinder


@pytest.fixture
def params21():
    return make_cylinder(2, 1)


@pytest.fixture
def params73():
    return make_cylinder(7, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
