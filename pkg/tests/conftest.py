import math
import numpy as np
import pytest
from fracpot.discrete.factory import get_space_factory
from fracpot.green import euclidean_heat_kernel, green_subordinated, riesz_constant
from fracpot.profiles import PowerLawVolume, SameAsVolumeMeasure, euclidean_volume


@pytest.fixture(scope='session', autouse=True)
def riesz_oracle():
    """The closed-form Riesz constant must match subordination before anything relies on it"""
    closed = riesz_constant(3, 0.5)
    assert closed == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-14)
    subordinated = green_subordinated(euclidean_heat_kernel(3), 0.5, 1.).value
    assert subordinated == pytest.approx(closed, rel=1e-6)
    return closed


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_cube_volume():
    """V(r) = r^3"""
    return PowerLawVolume(c=1., n=3.)


@pytest.fixture
def lebesgue():
    vol = euclidean_volume(3)
    return vol, SameAsVolumeMeasure(vol)


@pytest.fixture
def riesz_space():
    def make(seed, **kwargs):
        return get_space_factory('riesz')(seed=seed, **kwargs)
    return make
