from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_solve, solve_triangular

from package.errors import DimensionMismatch, NotPositiveDefinite

type Vector = NDArray[np.float64]
type SymMatrix = NDArray[np.float64]
type SizeCriterion = Literal["trace", "logdet"]

SIZE_CRITERIA: tuple[SizeCriterion, ...] = ("logdet", "trace")


def as_vector(x: ArrayLike) -> Vector:
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise DimensionMismatch(f"Expected a vector, got an array of shape {v.shape}")
    return v


def sym(m: NDArray) -> SymMatrix:
    """Kills round-off asymmetry, the upper and lower triangles become a single stored copy"""
    return (m + m.T) / 2


def as_sym_matrix(m: ArrayLike, name: str = "matrix") -> SymMatrix:
    a = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    scale = 1.0 + np.abs(a).max()
    if np.abs(a - a.T).max() > 1e-9 * scale:
        raise DimensionMismatch(f"{name} is not symmetric")
    return sym(a)


def eps_pd(m: SymMatrix) -> float:
    return 1e-10 * (1.0 + float(np.max(np.diag(m))))


def eps_psd(m: SymMatrix) -> float:
    # Row-sum norm bounds the spectral norm of a symmetric matrix
    return 1e-8 * (1.0 + float(np.abs(m).sum(axis=1).max()))


def cholesky(m: SymMatrix) -> NDArray[np.float64]:
    """Lower Cholesky factor, rejecting pivots at or below eps_pd"""
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite("Cholesky factorization failed") from e
    if np.min(np.diag(lower)) ** 2 <= eps_pd(m):
        raise NotPositiveDefinite(f"Cholesky pivot below {eps_pd(m):.3g}")
    return lower


def spd_inverse(m: SymMatrix, lower: NDArray[np.float64] | None = None) -> SymMatrix:
    lower = cholesky(m) if lower is None else lower
    return sym(cho_solve((lower, True), np.eye(m.shape[0])))


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """The set {x : (x - center)^T shape^-1 (x - center) <= 1}"""

    center: Vector
    shape: SymMatrix
    _chol: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self):
        center = as_vector(self.center)
        shape = as_sym_matrix(self.shape, "shape")
        if shape.shape[0] != center.shape[0]:
            raise DimensionMismatch(f"center has length {center.shape[0]} but shape has order {shape.shape[0]}")
        lower = cholesky(shape)
        for a in (center, shape, lower):
            a.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "_chol", lower)

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def chol(self) -> NDArray[np.float64]:
        return self._chol

    @cached_property
    def precision(self) -> SymMatrix:
        return spd_inverse(self.shape, self._chol)

    def distances(self, points: ArrayLike) -> NDArray[np.float64]:
        """Quadratic form values (x - c)^T P^-1 (x - c) for a (k, n) batch of points"""
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if x.shape[1] != self.dimension:
            raise DimensionMismatch(f"points have dimension {x.shape[1]}, ellipsoid has {self.dimension}")
        v = solve_triangular(self._chol, (x - self.center).T, lower=True)
        return np.einsum("ij,ij->j", v, v)

    def contains_all(self, points: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        return self.distances(points) <= 1.0 + tol

    def boundary(self, count: int = 256) -> NDArray[np.float64]:
        """Boundary polyline of a 2D ellipsoid, mapped through the Cholesky factor"""
        if self.dimension != 2:
            raise DimensionMismatch("boundary points are only defined for 2D ellipsoids")
        theta = np.linspace(0.0, 2.0 * np.pi, count)
        circle = np.vstack((np.cos(theta), np.sin(theta)))
        return (self.center[:, None] + self._chol @ circle).T

    def project(self, axes: Sequence[int] = (0, 1)) -> Ellipsoid:
        """Orthogonal projection onto a subset of coordinates"""
        idx = np.asarray(axes)
        return Ellipsoid(self.center[idx], self.shape[np.ix_(idx, idx)])

    def scaled(self, factor: float) -> Ellipsoid:
        return Ellipsoid(self.center, factor * self.shape)

    def to_json(self):
        return {"center": self.center.tolist(), "shape": self.shape.tolist()}

    def __repr__(self):
        return f"Ellipsoid(center={self.center.tolist()}, shape={self.shape.tolist()})"


def make_ellipsoid(center: ArrayLike, shape: ArrayLike) -> Ellipsoid:
    return Ellipsoid(as_vector(center), np.asarray(shape, dtype=np.float64))


def contains(e: Ellipsoid, x: ArrayLike, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    v = as_vector(x)
    if v.shape[0] != e.dimension:
        raise DimensionMismatch(f"point has dimension {v.shape[0]}, ellipsoid has {e.dimension}")
    w = solve_triangular(e.chol, v - e.center, lower=True)
    return bool(w @ w <= 1.0 + tol)


def size_value(e: Ellipsoid, criterion: SizeCriterion) -> float:
    match criterion:
        case "trace":
            return float(np.trace(e.shape))
        case "logdet":
            return float(2.0 * np.sum(np.log(np.diag(e.chol))))
        case _:
            raise ValueError(f"Unknown size criterion '{criterion}'")


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Ellipsoid as xi^T A xi <= 0 with xi = [x; 1]"""

    matrix: SymMatrix

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def block(self) -> tuple[SymMatrix, Vector, float]:
        a = self.matrix
        n = self.dimension
        return a[:n, :n], a[:n, n], float(a[n, n])

    def to_ellipsoid(self) -> Ellipsoid:
        """Recovers (center, shape), also for positively scaled forms"""
        a11, a12, a22 = self.block
        lower = cholesky(a11)
        center = -cho_solve((lower, True), a12)
        radius = float(center @ a11 @ center - a22)
        if radius <= 0:
            raise NotPositiveDefinite("quadratic form describes an empty set")
        return Ellipsoid(center, radius * spd_inverse(a11, lower))


def quadratic_form(e: Ellipsoid) -> QuadraticForm:
    inv = e.precision
    b = -inv @ e.center
    n = e.dimension
    a = np.empty((n + 1, n + 1))
    a[:n, :n] = inv
    a[:n, n] = b
    a[n, :n] = b
    a[n, n] = float(e.center @ inv @ e.center) - 1.0
    return QuadraticForm(sym(a))


def assemble_blocks(a: SymMatrix, b: NDArray, c: SymMatrix) -> SymMatrix:
    a, c = np.atleast_2d(a), np.atleast_2d(c)
    b = np.atleast_2d(b)
    if b.shape != (a.shape[0], c.shape[0]) or a.shape[0] != a.shape[1] or c.shape[0] != c.shape[1]:
        raise DimensionMismatch(f"blocks are not conformal: A {a.shape}, B {b.shape}, C {c.shape}")
    return sym(np.block([[a, b], [b.T, c]]))


def schur_psd(a: SymMatrix, b: NDArray, c: SymMatrix) -> bool:
    m = assemble_blocks(a, b, c)
    return bool(np.linalg.eigvalsh(m)[0] >= -eps_psd(m))


def schur_psd_lemma(a: SymMatrix, b: NDArray, c: SymMatrix, tol: float = 1e-7) -> bool:
    """Generalized Schur complement test: C >= 0, A - B C^+ B^T >= 0 and (I - C C^+) B^T = 0"""
    m = assemble_blocks(a, b, c)
    a, c = np.atleast_2d(a), np.atleast_2d(c)
    b = np.atleast_2d(b)
    scale = 1.0 + float(np.abs(m).sum(axis=1).max())
    c_pinv = np.linalg.pinv(c, rcond=1e-10, hermitian=True)
    if np.linalg.eigvalsh(c)[0] < -tol * scale:
        return False
    if np.abs((np.eye(c.shape[0]) - c @ c_pinv) @ b.T).max() > tol * scale:
        return False
    return bool(np.linalg.eigvalsh(sym(a - b @ c_pinv @ b.T))[0] >= -tol * scale)


@dataclass(frozen=True, eq=False)
class IntersectionSpec:
    ellipsoids: tuple[Ellipsoid, ...]

    def __post_init__(self):
        ellipsoids = tuple(self.ellipsoids)
        if len(ellipsoids) < 1:
            raise DimensionMismatch("an intersection needs at least one ellipsoid")
        n = ellipsoids[0].dimension
        if any(e.dimension != n for e in ellipsoids):
            raise DimensionMismatch("all ellipsoids of an intersection must share the same dimension")
        object.__setattr__(self, "ellipsoids", ellipsoids)

    @property
    def dimension(self) -> int:
        return self.ellipsoids[0].dimension

    @property
    def size(self) -> int:
        return len(self.ellipsoids)

    def __len__(self):
        return len(self.ellipsoids)

    def __iter__(self) -> Iterator[Ellipsoid]:
        return iter(self.ellipsoids)

    def __getitem__(self, i: int) -> Ellipsoid:
        return self.ellipsoids[i]

    def appended(self, e: Ellipsoid) -> IntersectionSpec:
        return IntersectionSpec((*self.ellipsoids, e))

    def contains_all(self, points: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        inside = np.ones(np.atleast_2d(points).shape[0], dtype=bool)
        for e in self.ellipsoids:
            inside &= e.contains_all(points, tol)
        return inside

    def max_distance(self, x: ArrayLike) -> float:
        return max(float(e.distances(x)[0]) for e in self.ellipsoids)

    def to_json(self):
        return {"ellipsoids": [e.to_json() for e in self.ellipsoids]}
