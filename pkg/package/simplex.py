from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from package.context import log_debug
from package.ellipsoid import Vector
from package.errors import OptimizerFailed

type SimplexObjective = Callable[[Vector], tuple[float, Vector]]


def project_simplex(v: ArrayLike, z: float = 1.0) -> Vector:
    """Euclidean projection onto {t : t >= 0, sum(t) = z} by sorting"""
    x = np.asarray(v, dtype=np.float64).ravel()
    u = np.sort(x)[::-1]
    cssv = np.cumsum(u) - z
    ind = np.arange(1, x.shape[0] + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(x - theta, 0.0)


def barycenter(m: int) -> Vector:
    return np.full(m, 1.0 / m)


@dataclass(frozen=True)
class SimplexOptions:
    starts: int = 16
    max_iterations: int = 2000
    armijo: float = 1e-4
    stationarity_tol: float = 1e-10
    tie_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1 or self.max_iterations < 1:
            raise ValueError("starts and max_iterations must be at least 1")


@dataclass(frozen=True, eq=False)
class SimplexResult:
    t: Vector
    value: float
    iterations: int
    converged: bool
    start: int

    def to_json(self):
        return {"iterations": self.iterations, "converged": self.converged, "start": self.start}


def simplex_starts(m: int, opts: SimplexOptions) -> list[Vector]:
    """Barycenter first, then the vertices, then seeded Dirichlet draws up to `opts.starts` points"""
    starts = [barycenter(m)]
    starts += [np.eye(m)[i] for i in range(m) if m > 1][: max(opts.starts - 1, 0)]
    rng = np.random.default_rng(opts.seed)
    while len(starts) < opts.starts:
        starts.append(rng.dirichlet(np.ones(m)))
    return starts


def _descend(fun: SimplexObjective, t: Vector, opts: SimplexOptions) -> tuple[Vector, float, int, bool]:
    """Projected gradient with Barzilai-Borwein step lengths and Armijo backtracking"""
    value, grad = fun(t)
    if not np.isfinite(value):
        return t, value, 0, False
    step = 1.0
    for it in range(opts.max_iterations):
        if np.linalg.norm(project_simplex(t - grad) - t) <= opts.stationarity_tol:
            return t, value, it, True

        while True:
            candidate = project_simplex(t - step * grad)
            d = candidate - t
            trial, trial_grad = fun(candidate)
            if np.isfinite(trial) and trial <= value + opts.armijo * float(grad @ d):
                break
            step *= 0.5
            if step < 1e-20:
                return t, value, it, True

        s = candidate - t
        y = trial_grad - grad
        t, value, grad = candidate, trial, trial_grad
        if np.linalg.norm(s) <= 1e-15:
            return t, value, it + 1, True
        sy = float(s @ y)
        step = float(np.clip(s @ s / sy, 1e-10, 1e10)) if sy > 0 else min(2.0 * step, 1e10)
    return t, value, opts.max_iterations, False


def minimize_on_simplex(fun: SimplexObjective, m: int, opts: SimplexOptions = SimplexOptions()) -> SimplexResult:
    """Multi-start minimization of fun over the probability simplex of dimension m.

    fun returns the value and the gradient. Ties with the barycenter run are resolved in its favour, so flat
    objectives return equal weights.
    """
    if m == 1:
        value, _ = fun(np.ones(1))
        return SimplexResult(np.ones(1), value, 0, True, 0)

    best: SimplexResult | None = None
    for k, start in enumerate(simplex_starts(m, opts)):
        t, value, iterations, converged = _descend(fun, start, opts)
        if not converged:
            log_debug(f"minimize_on_simplex: start {k} stopped after {iterations} iterations")
        if np.isfinite(value) and (best is None or value < best.value - opts.tie_tol):
            best = SimplexResult(t, value, iterations, converged, k)

    if best is None:
        raise OptimizerFailed("objective is not finite at any start on the simplex")
    return best
