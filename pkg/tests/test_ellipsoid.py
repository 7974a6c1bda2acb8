import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from package.ellipsoid import (
    Ellipsoid,
    IntersectionSpec,
    QuadraticForm,
    contains,
    eps_pd,
    eps_psd,
    make_ellipsoid,
    quadratic_form,
    schur_psd,
    schur_psd_lemma,
    size_value,
)
from package.errors import DimensionMismatch, NotPositiveDefinite
from package.scenarios import STATIC_SHAPES

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_ellipsoid(rng: np.random.Generator, n: int) -> Ellipsoid:
    a = rng.standard_normal((n, n))
    return Ellipsoid(rng.uniform(-5, 5, size=n), a @ a.T + 0.1 * np.eye(n))


def test_make_valid_ellipsoids(unit_disk):
    assert unit_disk.dimension == 2
    e = Ellipsoid([12.0, 11.0], STATIC_SHAPES[0])
    assert np.allclose(e.precision @ e.shape, np.eye(2))
    assert np.array_equal(make_ellipsoid((1, 2), [[2, 0], [0, 3]]).shape, [[2.0, 0.0], [0.0, 3.0]])


def test_ellipsoid_arrays_are_read_only(unit_disk):
    with pytest.raises(ValueError):
        unit_disk.center[0] = 1.0


@pytest.mark.parametrize(
    "center, shape",
    [([0.0], [[-1.0]]), ([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]]), ([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])],
)
def test_reject_non_positive_definite(center, shape):
    with pytest.raises(NotPositiveDefinite):
        Ellipsoid(center, shape)


def test_reject_mismatched_dimensions():
    with pytest.raises(DimensionMismatch):
        Ellipsoid([0.0, 0.0, 0.0], np.eye(2))
    with pytest.raises(DimensionMismatch):
        Ellipsoid([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        IntersectionSpec((Ellipsoid([0.0], [[1.0]]), Ellipsoid([0.0, 0.0], np.eye(2))))
    with pytest.raises(DimensionMismatch):
        IntersectionSpec(())


def test_contains(unit_disk):
    assert contains(unit_disk, [0.0, 0.0])
    assert contains(unit_disk, [1.0, 0.0])
    assert not contains(unit_disk, [1.1, 0.0])
    assert contains(unit_disk, [1.1, 0.0], tol=0.25)
    with pytest.raises(DimensionMismatch):
        contains(unit_disk, [0.0])
    with pytest.raises(ValueError):
        contains(unit_disk, [0.0, 0.0], tol=-1.0)


def test_size_value(unit_disk):
    assert size_value(unit_disk, "logdet") == pytest.approx(0.0, abs=1e-15)
    assert size_value(unit_disk, "trace") == pytest.approx(2.0)
    assert size_value(Ellipsoid([0.0, 0.0], STATIC_SHAPES[0]), "logdet") == pytest.approx(np.log(47.0))


def test_tolerances():
    assert eps_pd(np.eye(2)) == pytest.approx(2e-10)
    assert eps_psd(np.eye(2)) == pytest.approx(2e-8)


def test_quadratic_form_examples(unit_disk):
    assert np.allclose(quadratic_form(unit_disk).matrix, [[1, 0, 0], [0, 1, 0], [0, 0, -1]])
    assert np.allclose(quadratic_form(Ellipsoid([2.0], [[4.0]])).matrix, [[0.25, -0.5], [-0.5, 0.0]])
    e = Ellipsoid([12.0, 11.0], STATIC_SHAPES[0])
    a11, _, _ = quadratic_form(e).block
    assert np.allclose(a11, np.linalg.inv(STATIC_SHAPES[0]))


@settings(max_examples=50, deadline=None)
@given(seed=seeds, n=st.integers(min_value=1, max_value=4), scale=st.floats(min_value=0.1, max_value=10.0))
def test_quadratic_form_round_trip(seed, n, scale):
    rng = np.random.default_rng(seed)
    e = random_ellipsoid(rng, n)
    form = quadratic_form(e)
    back = QuadraticForm(scale * form.matrix).to_ellipsoid()
    assert np.allclose(back.center, e.center, atol=1e-8)
    assert np.allclose(back.shape, e.shape, rtol=1e-7, atol=1e-8)

    x = rng.standard_normal(n)
    xi = np.append(x, 1.0)
    assert float(xi @ form.matrix @ xi) == pytest.approx(float(e.distances(x)[0]) - 1.0, rel=1e-9, abs=1e-9)


def test_boundary_points_lie_on_the_ellipsoid():
    e = Ellipsoid([12.0, 11.0], STATIC_SHAPES[0])
    points = e.boundary(256)
    assert points.shape == (256, 2)
    assert np.allclose(e.distances(points), 1.0)
    with pytest.raises(DimensionMismatch):
        Ellipsoid([0.0], [[1.0]]).boundary()


@pytest.mark.parametrize(
    "a, b, c, expected",
    [
        (np.eye(2), np.zeros((2, 2)), np.eye(2), True),
        ([[1.0]], [[2.0]], [[1.0]], False),
        ([[1.0]], [[1.0]], [[1.0]], True),
    ],
)
def test_schur_examples(a, b, c, expected):
    assert schur_psd(a, b, c) == expected
    assert schur_psd_lemma(a, b, c) == expected


@settings(max_examples=100, deadline=None)
@given(seed=seeds, n=st.integers(min_value=1, max_value=3), k=st.integers(min_value=1, max_value=3))
def test_schur_complement_agrees_with_eigenvalues(seed, n, k):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((k, k))
    c = g @ g.T
    b = rng.standard_normal((n, k))
    h = rng.standard_normal((n, n))
    a = h @ h.T + rng.uniform(-1, 1) * np.eye(n)
    m = np.block([[a, b], [b.T, c]])
    assume(abs(np.linalg.eigvalsh(m)[0]) > 1e-4)
    assert schur_psd(a, b, c) == schur_psd_lemma(a, b, c)


def test_intersection_spec(static):
    assert len(static) == static.size == 3
    assert static.dimension == 2
    assert static.contains_all([[12.0, 10.5]])[0]
    larger = static.appended(Ellipsoid([0.0, 0.0], np.eye(2)))
    assert len(larger) == 4
    assert not larger.contains_all([[12.0, 10.5]])[0]
    assert static.to_json()["ellipsoids"][0]["center"] == [12.0, 11.0]
