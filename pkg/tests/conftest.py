import numpy as np
import pytest

from package.context import make_warnings_ctx, reset_warnings_ctx
from package.ellipsoid import Ellipsoid, IntersectionSpec
from package.scenarios import RandomInstance, random_instance, static_spec


@pytest.fixture
def unit_disk() -> Ellipsoid:
    return Ellipsoid([0.0, 0.0], np.eye(2))


@pytest.fixture
def static() -> IntersectionSpec:
    return static_spec(9.5)


@pytest.fixture
def intervals() -> IntersectionSpec:
    """[-1, 1] and [0, 2]"""
    return IntersectionSpec((Ellipsoid([0.0], [[1.0]]), Ellipsoid([1.0], [[1.0]])))


@pytest.fixture
def disjoint() -> IntersectionSpec:
    return IntersectionSpec((Ellipsoid([0.0, 0.0], np.eye(2)), Ellipsoid([3.0, 0.0], np.eye(2))))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(params=[5, 9, 14])
def instance(request) -> RandomInstance:
    return random_instance(request.param)


@pytest.fixture
def warnings():
    token = make_warnings_ctx()
    yield
    reset_warnings_ctx(token)


@pytest.fixture
def far_apart() -> IntersectionSpec:
    """Disjoint pair whose equal-weight fusion has delta below 1"""
    return IntersectionSpec((Ellipsoid([0.0, 0.0], 100.0 * np.eye(2)), Ellipsoid([10.5, 0.0], 0.01 * np.eye(2))))
