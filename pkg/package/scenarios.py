from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from package.ellipsoid import Ellipsoid, IntersectionSpec, Vector

STATIC_SHAPES = (
    np.array([[6.0, -5.0], [-5.0, 12.0]]),
    np.array([[10.0, 1.0], [1.0, 3.0]]),
    np.array([[5.0, 5.0], [5.0, 9.0]]),
)
STATIC_XI_RANGE = (9.0, 10.0)
STATIC_DRAWS = 100

# Published mean logdet values of the static comparison, per method
STATIC_REFERENCE: dict[str, float] = {
    "full_sdp": 2.6293,
    "decoupled_sdp": 2.6293,
    "inscribed_inflate": 4.2379,
    "bounding_no_delta": 2.6378,
    "recursive_bounding": 2.6500,
}


def static_spec(xi: float = 9.5) -> IntersectionSpec:
    """Three local estimates of a 2D position, the third one's second coordinate free"""
    centers = (np.array([12.0, 11.0]), np.array([12.0, 10.0]), np.array([12.0, xi]))
    return IntersectionSpec(tuple(Ellipsoid(c, p) for c, p in zip(centers, STATIC_SHAPES)))


def static_draws(seed: int, count: int = STATIC_DRAWS) -> Vector:
    return np.random.default_rng(seed).uniform(*STATIC_XI_RANGE, size=count)


@dataclass(frozen=True)
class RandomInstance:
    seed: int
    spec: IntersectionSpec
    interior_point: Vector

    @property
    def label(self) -> str:
        return f"seed={self.seed} n={self.spec.dimension} m={len(self.spec)}"


GRID_SIZES = (1, 2, 3, 5)


def _random_shape(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    eig = rng.uniform(0.5, 4.0, size=n)
    return (q * eig) @ q.T, (q * np.sqrt(eig)) @ q.T


def random_instance(seed: int, n: int | None = None, m: int | None = None) -> RandomInstance:
    """Members sharing a common point p, each with p at scaled distance at most 0.7 from its center"""
    rng = np.random.default_rng(seed)
    n = 1 + seed % 4 if n is None else n
    m = GRID_SIZES[(seed // 4) % len(GRID_SIZES)] if m is None else m
    p = rng.uniform(-2.0, 2.0, size=n)
    members = []
    for _ in range(m):
        shape, root = _random_shape(rng, n)
        u = rng.standard_normal(n)
        u *= 0.7 * rng.random() ** (1.0 / n) / np.linalg.norm(u)
        members.append(Ellipsoid(p + root @ u, shape))
    return RandomInstance(seed, IntersectionSpec(tuple(members)), p)


def instance_grid(count: int = 50) -> list[RandomInstance]:
    return [random_instance(seed) for seed in range(count)]
