import numpy as np
import pytest

from package.methods import TABLE_ROWS, run_method
from package.scenarios import (
    STATIC_DRAWS,
    STATIC_REFERENCE,
    instance_grid,
    random_instance,
    static_draws,
    static_spec,
)


def test_static_spec():
    spec = static_spec(9.25)
    assert len(spec) == 3
    assert np.allclose(spec[2].center, [12.0, 9.25])
    assert np.allclose(spec[0].shape, [[6.0, -5.0], [-5.0, 12.0]])


def test_static_draws_are_seeded():
    draws = static_draws(3)
    assert draws.shape == (STATIC_DRAWS,)
    assert np.all((draws >= 9.0) & (draws <= 10.0))
    assert np.array_equal(draws, static_draws(3))
    assert not np.array_equal(draws, static_draws(4))


def test_random_grid():
    grid = instance_grid(50)
    assert [g.seed for g in grid] == list(range(50))
    assert {g.spec.dimension for g in grid} == {1, 2, 3, 4}
    assert {len(g.spec) for g in grid} == {1, 2, 3, 5}
    for g in grid:
        # Every member contains the common point, so the intersection is nonempty
        assert g.spec.contains_all([g.interior_point]).all()
        assert g.spec.max_distance(g.interior_point) <= 0.49 + 1e-12
    assert random_instance(7).label == random_instance(7).label


def test_random_instance_overrides():
    instance = random_instance(1, n=2, m=4)
    assert instance.spec.dimension == 2
    assert len(instance.spec) == 4


def test_static_table():
    """Mean logdet over 100 draws of the free coordinate, per method"""
    draws = static_draws(0)
    means = {
        method: float(np.mean([run_method(method, static_spec(float(xi))).objective for xi in draws]))
        for method, _ in TABLE_ROWS
    }
    assert means["full_sdp"] == pytest.approx(STATIC_REFERENCE["full_sdp"], abs=0.05)
    assert means["decoupled_sdp"] == pytest.approx(STATIC_REFERENCE["decoupled_sdp"], abs=0.05)
    assert means["full_sdp"] == pytest.approx(means["decoupled_sdp"], abs=1e-4)
    assert means["inscribed_inflate"] == pytest.approx(STATIC_REFERENCE["inscribed_inflate"], abs=0.05)

    bounding = (STATIC_REFERENCE["bounding_no_delta"], STATIC_REFERENCE["recursive_bounding"])
    for method in ("bounding_no_delta", "recursive_bounding"):
        assert min(abs(means[method] - v) for v in bounding) <= 0.05
