from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import ConvexHull, QhullError

from package.context import log_debug
from package.ellipsoid import Ellipsoid, IntersectionSpec, Vector, size_value, sym
from package.errors import DegenerateInput, SamplingBudgetExceeded

FEASIBILITY_ITERATIONS = 5000
FEASIBILITY_MARGIN = 1e-9
SAMPLING_BUDGET = 1_000_000


def sample_in_ellipsoid_batch(e: Ellipsoid, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Uniform points in e: uniform direction, radius u^(1/n), mapped through the Cholesky factor"""
    n = e.dimension
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.random(count) ** (1.0 / n)
    return e.center + (radii[:, None] * directions) @ e.chol.T


def sample_in_ellipsoid(e: Ellipsoid, rng: np.random.Generator) -> Vector:
    return sample_in_ellipsoid_batch(e, 1, rng)[0]


def intersection_feasible_point(spec: IntersectionSpec, iterations: int = FEASIBILITY_ITERATIONS) -> Vector | None:
    """Subgradient descent on g(x) = max_i (x - x_i)^T P_i^-1 (x - x_i) from the mean of the centers.
    None means no point was found within the budget, it does not prove the intersection is empty"""
    centers = np.array([e.center for e in spec])
    x = centers.mean(axis=0)
    spread = float(max(np.linalg.norm(a - b) for a in centers for b in centers))
    step = spread if spread > 0 else 1.0

    best, best_g = x.copy(), spec.max_distance(x)
    for k in range(1, iterations + 1):
        if best_g <= 1.0 - FEASIBILITY_MARGIN:
            return best
        values = [float(e.distances(x)[0]) for e in spec]
        worst = spec[int(np.argmax(values))]
        grad = 2.0 * worst.precision @ (x - worst.center)
        norm = np.linalg.norm(grad)
        if norm == 0:
            break
        x = x - (step / np.sqrt(k)) * grad / norm
        if (g := spec.max_distance(x)) < best_g:
            best, best_g = x.copy(), g

    if best_g <= 1.0 - FEASIBILITY_MARGIN:
        return best
    log_debug(f"intersection_feasible_point: gave up with g = {best_g:.6g}")
    return None


def sample_intersection(
    spec: IntersectionSpec, count: int, rng: np.random.Generator, budget: int = SAMPLING_BUDGET
) -> NDArray[np.float64]:
    """Rejection sampling from the member with the smallest volume"""
    base = min(spec, key=lambda e: size_value(e, "logdet"))
    accepted: list[NDArray[np.float64]] = []
    n_accepted = 0
    drawn = 0
    batch = max(1000, 4 * count)
    while n_accepted < count and drawn < budget:
        size = min(batch, budget - drawn)
        points = sample_in_ellipsoid_batch(base, size, rng)
        drawn += size
        inside = points[spec.contains_all(points, 0.0)]
        accepted.append(inside[: count - n_accepted])
        n_accepted += len(accepted[-1])

    points = np.concatenate(accepted) if accepted else np.empty((0, spec.dimension))
    if n_accepted < count:
        raise SamplingBudgetExceeded(
            f"accepted {n_accepted} of {count} points after {drawn} draws", accepted=list(points)
        )
    return points


def affine_rank(points: NDArray[np.float64]) -> int:
    centered = points - points.mean(axis=0)
    return int(np.linalg.matrix_rank(centered, tol=1e-10 * (1.0 + np.abs(points).max())))


def hull_vertices(points: NDArray[np.float64]) -> NDArray[np.float64]:
    if points.shape[1] < 2:
        return points[[np.argmin(points[:, 0]), np.argmax(points[:, 0])]]
    try:
        hull = ConvexHull(points)
    except QhullError:
        return points
    return points[np.unique(hull.simplices)]


def mvee_of_points(points: ArrayLike, tol: float = 1e-6, limit: int = 100_000) -> Ellipsoid:
    """Minimum volume enclosing ellipsoid by Khachiyan's multiplicative-weights iteration.

    Every iterate is a lower bound on the log-volume of the optimum; the loop stops once all points lie
    inside the (1 + tol) scaled ellipsoid.
    """
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = p.shape[1]
    if p.shape[0] < n + 1 or affine_rank(p) < n:
        raise DegenerateInput("points are affinely dependent")

    p = hull_vertices(p)
    count = p.shape[0]
    q = np.vstack((p.T, np.ones(count)))
    u = np.full(count, 1.0 / count)
    for _ in range(limit):
        x = q @ (u[:, None] * q.T)
        m = np.einsum("ji,jk,ki->i", q, np.linalg.inv(x), q)
        j = int(np.argmax(m))
        # (m_j - 1) / n is the largest scaled distance of a point to the current ellipsoid
        if (m[j] - 1.0) / n - 1.0 <= tol:
            break
        step = (m[j] - n - 1.0) / ((n + 1.0) * (m[j] - 1.0))
        u *= 1.0 - step
        u[j] += step
    else:
        log_debug(f"mvee_of_points: stopped after {limit} iterations")

    c = u @ p
    shape = n * sym(p.T @ (u[:, None] * p) - np.outer(c, c))
    return Ellipsoid(c, shape)
