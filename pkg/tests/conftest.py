import numpy as np
import pytest

from maclaurin_gp import KernelParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_params():
    return KernelParams(1.0, 1.0, 0.1)
