import numpy as np
import pytest

from package.barrier import eval_map
from package.bounding import bounding_optimal
from package.ellipsoid import Ellipsoid, IntersectionSpec
from package.errors import EmptyIntersection, Infeasible
from package.sampling import sample_intersection
from package.sdp import (
    decoupled_map,
    decoupled_sdp,
    decoupled_start,
    find_s_procedure_multipliers,
    full_sdp,
    full_sdp_map,
    inscribed_inflate,
    lift_decoupled,
    max_inscribed,
    s_procedure,
    s_procedure_holds,
    s_procedure_map,
    sdp_relaxation_holds,
)


def test_s_procedure_map_is_the_negated_relaxation(static, rng):
    full = full_sdp_map(static)
    sproc = s_procedure_map(static)
    y = rng.standard_normal(full.n_vars)
    assert np.allclose(eval_map(sproc, y), -eval_map(full, y))


@pytest.mark.parametrize("method", [full_sdp, s_procedure, decoupled_sdp])
def test_single_member_is_returned(unit_disk, method):
    result = method(IntersectionSpec((unit_disk,)))
    assert np.allclose(result.ellipsoid.center, 0.0, atol=1e-6)
    assert np.allclose(result.ellipsoid.shape, np.eye(2), atol=1e-6)
    assert result.weights is not None
    assert result.weights.weights[0] == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("criterion", ["logdet", "trace"])
def test_full_and_decoupled_agree(static, criterion):
    full = full_sdp(static, criterion)
    decoupled = decoupled_sdp(static, criterion)
    assert full.objective == pytest.approx(decoupled.objective, abs=1e-4)


def test_full_and_decoupled_agree_on_random_instances(instance):
    for criterion in ("logdet", "trace"):
        full = full_sdp(instance.spec, criterion)
        decoupled = decoupled_sdp(instance.spec, criterion)
        assert full.objective == pytest.approx(decoupled.objective, abs=1e-4)


def test_s_procedure_matches_full(static):
    full = full_sdp(static)
    sproc = s_procedure(static)
    assert sproc.objective == pytest.approx(full.objective, abs=1e-6)
    assert np.allclose(sproc.ellipsoid.center, full.ellipsoid.center, atol=1e-5)
    assert np.allclose(sproc.ellipsoid.shape, full.ellipsoid.shape, atol=1e-5)


def test_decoupled_matches_optimal_bounding(static, intervals):
    assert decoupled_sdp(static).objective == pytest.approx(bounding_optimal(static).objective, abs=1e-4)

    result = decoupled_sdp(intervals)
    assert result.ellipsoid.center[0] == pytest.approx(0.5, abs=1e-5)
    assert result.ellipsoid.shape[0, 0] == pytest.approx(0.75, abs=1e-5)


def test_decoupled_start_is_strictly_feasible(static):
    lam = decoupled_start(static)
    assert lam is not None
    assert np.linalg.eigvalsh(eval_map(decoupled_map(static), lam))[0] > 0


def test_lifted_decoupled_solution_is_feasible_for_the_relaxation(static):
    result = decoupled_sdp(static)
    assert result.weights is not None
    y = lift_decoupled(static, result.weights.weights)
    assert np.linalg.eigvalsh(eval_map(full_sdp_map(static), y))[-1] <= 1e-6
    assert sdp_relaxation_holds(result.ellipsoid, static, result.weights, tol=1e-6)


def test_s_procedure_certificate(unit_disk, static):
    spec = IntersectionSpec((unit_disk,))
    assert s_procedure_holds(unit_disk, spec, [1.0])
    assert not s_procedure_holds(unit_disk, spec, [0.5])
    tau = find_s_procedure_multipliers(unit_disk, spec)
    assert tau is not None
    assert tau.weights[0] == pytest.approx(1.0, abs=1e-3)

    full = full_sdp(static)
    assert full.weights is not None
    # Enlarging the certified ellipsoid keeps the certificate with rescaled multipliers
    assert s_procedure_holds(full.ellipsoid.scaled(1.01), static, full.weights.weights / 1.01)
    assert find_s_procedure_multipliers(full.ellipsoid.scaled(1.01), static) is not None

    shrunk = full.ellipsoid.scaled(0.25)
    assert find_s_procedure_multipliers(shrunk, static) is None
    points = sample_intersection(static, 2000, np.random.default_rng(1))
    assert not shrunk.contains_all(points).all()


def test_predicates_agree(static, rng):
    full = full_sdp(static)
    assert full.weights is not None
    for _ in range(50):
        factor = rng.uniform(0.5, 2.0)
        candidate = Ellipsoid(full.ellipsoid.center + rng.normal(0, 0.2, 2), factor * full.ellipsoid.shape)
        tau = full.weights.weights * rng.uniform(0.5, 1.5, size=3)
        assert s_procedure_holds(candidate, static, tau) == sdp_relaxation_holds(candidate, static, tau)


def test_results_contain_the_intersection(static, rng):
    points = sample_intersection(static, 5000, rng)
    for method in (full_sdp, s_procedure, decoupled_sdp, inscribed_inflate):
        result = method(static)
        assert result.ellipsoid.contains_all(points, 1e-9).all(), result.method


def test_empty_intersection(disjoint):
    for method in (full_sdp, s_procedure, decoupled_sdp):
        with pytest.raises(EmptyIntersection):
            method(disjoint)
    with pytest.raises(Infeasible):
        inscribed_inflate(disjoint)


def test_empty_intersection_with_a_large_and_a_small_member(far_apart):
    for method in (full_sdp, s_procedure, decoupled_sdp):
        with pytest.raises(EmptyIntersection):
            method(far_apart)
    with pytest.raises(EmptyIntersection):
        decoupled_start(far_apart)


def test_inscribed_single_disk(unit_disk):
    inner, _ = max_inscribed(IntersectionSpec((unit_disk,)))
    assert np.allclose(inner.center, 0.0, atol=1e-5)
    assert np.allclose(inner.shape, np.eye(2), atol=1e-5)
    outer = inscribed_inflate(IntersectionSpec((unit_disk,))).ellipsoid
    assert np.allclose(outer.shape, 4.0 * np.eye(2), atol=1e-4)


def test_inscribed_lens_is_symmetric():
    spec = IntersectionSpec((Ellipsoid([-0.5, 0.0], np.eye(2)), Ellipsoid([0.5, 0.0], np.eye(2))))
    inner, _ = max_inscribed(spec)
    assert np.allclose(inner.center, 0.0, atol=1e-5)
    assert abs(inner.shape[0, 1]) <= 1e-5
    assert inner.shape[0, 0] < inner.shape[1, 1]
    assert spec.contains_all(inner.boundary(64), 1e-6).all()
