"""Weighted information-form fusion of ellipsoids over the simplex.

For weights t on the simplex the set {x : sum_i t_i (x - x_i)^T P_i^-1 (x - x_i) <= 1} contains the intersection
and equals the ellipsoid (x_t, (1 - delta_t) P_t). Covariance intersection drops the (1 - delta_t) factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_solve
from scipy.optimize import minimize_scalar

from package.context import log_debug
from package.ellipsoid import (
    Ellipsoid,
    IntersectionSpec,
    SizeCriterion,
    SymMatrix,
    Vector,
    cholesky,
    spd_inverse,
)
from package.errors import DimensionMismatch, EmptyIntersection, NotPositiveDefinite, SingularCombination
from package.results import MethodResult, WeightVector
from package.simplex import SimplexOptions, barycenter, minimize_on_simplex

DELTA_CEILING = 1.0 - 1e-12
EMPTY_MARGIN = 1e-9
PAIR_GRID = 11
EMPTY_CHECK = SimplexOptions(starts=1, max_iterations=500, stationarity_tol=1e-9)


@dataclass(frozen=True, eq=False)
class FusionTerms:
    """Per-member precisions P_i^-1, information vectors P_i^-1 x_i and scalars x_i^T P_i^-1 x_i"""

    spec: IntersectionSpec

    @cached_property
    def precisions(self) -> NDArray[np.float64]:
        return np.array([e.precision for e in self.spec])

    @cached_property
    def information(self) -> NDArray[np.float64]:
        return np.einsum("kij,kj->ki", self.precisions, self.centers)

    @cached_property
    def centers(self) -> NDArray[np.float64]:
        return np.array([e.center for e in self.spec])

    @cached_property
    def offsets(self) -> Vector:
        return np.einsum("ki,ki->k", self.centers, self.information)


@dataclass(frozen=True, eq=False)
class ParametricFusion:
    shape: SymMatrix
    center: Vector
    delta: float
    information: SymMatrix

    def outer(self, scale_delta: bool = True) -> Ellipsoid:
        if not scale_delta:
            return Ellipsoid(self.center, self.shape)
        delta = min(max(self.delta, 0.0), DELTA_CEILING)
        return Ellipsoid(self.center, (1.0 - delta) * self.shape)


def _combine(terms: FusionTerms, t: Vector):
    s = np.einsum("k,kij->ij", t, terms.precisions)
    try:
        lower = cholesky(s)
    except NotPositiveDefinite as e:
        raise SingularCombination("weighted sum of precisions is not positive definite") from e
    b = t @ terms.information
    x = cho_solve((lower, True), b)
    delta = float(t @ terms.offsets - x @ b)
    return s, lower, x, delta


def _weights(spec: IntersectionSpec, t: WeightVector | ArrayLike) -> Vector:
    w = t if isinstance(t, WeightVector) else WeightVector(np.asarray(t, dtype=np.float64))
    if len(w) != len(spec):
        raise DimensionMismatch(f"{len(w)} weights for {len(spec)} ellipsoids")
    return w.weights


def parametric_fuse(spec: IntersectionSpec, t: WeightVector | ArrayLike) -> ParametricFusion:
    return fuse_terms(FusionTerms(spec), _weights(spec, t))


def fuse_terms(terms: FusionTerms, t: Vector) -> ParametricFusion:
    s, lower, x, delta = _combine(terms, t)
    return ParametricFusion(spd_inverse(s, lower), x, delta, s)


def max_delta(terms: FusionTerms, opts: SimplexOptions = EMPTY_CHECK) -> tuple[Vector, float]:
    """Largest delta_t over the simplex; delta_t is concave in t with gradient (x_i - x_t)^T P_i^-1 (x_i - x_t)"""

    def fun(t: Vector) -> tuple[float, Vector]:
        try:
            _, _, x, delta = _combine(terms, t)
        except SingularCombination:
            return float("inf"), np.zeros_like(t)
        diff = terms.centers - x
        return -delta, -np.einsum("ki,kij,kj->k", diff, terms.precisions, diff)

    found = minimize_on_simplex(fun, len(terms.spec), opts)
    return found.t, -found.value


def check_nonempty(spec: IntersectionSpec, terms: FusionTerms | None = None) -> float:
    """Raises EmptyIntersection when delta_t exceeds 1 anywhere on the simplex, returns delta at the barycenter"""
    if len(spec) == 1:
        return 0.0
    terms = terms or FusionTerms(spec)
    delta = _combine(terms, barycenter(len(spec)))[3]
    t, worst = (barycenter(len(spec)), delta) if delta > 1.0 + EMPTY_MARGIN else max_delta(terms)
    if worst > 1.0 + EMPTY_MARGIN:
        raise EmptyIntersection(
            f"weighted fusion certifies an empty intersection (delta = {worst:.6g} at t = {np.round(t, 6).tolist()})"
        )
    log_debug(f"check_nonempty: largest delta {worst:.6g}")
    return delta


def fusion_objective(terms: FusionTerms, criterion: SizeCriterion, scale_delta: bool):
    """size of P_t, or of (1 - delta_t) P_t when scale_delta, with its gradient in t"""
    n = terms.spec.dimension

    def fun(t: Vector) -> tuple[float, Vector]:
        try:
            s, lower, x, delta = _combine(terms, t)
        except SingularCombination:
            return float("inf"), np.zeros_like(t)
        if delta > 1.0 + EMPTY_MARGIN:
            raise EmptyIntersection(f"weighted fusion certifies an empty intersection (delta = {delta:.6g})")
        delta = min(max(delta, 0.0), DELTA_CEILING)
        s_inv = spd_inverse(s, lower)
        diff = terms.centers - x
        # d delta / d t_i
        d = np.einsum("ki,kij,kj->k", diff, terms.precisions, diff)
        match criterion:
            case "logdet":
                value = -2.0 * float(np.sum(np.log(np.diag(lower))))
                grad = -np.einsum("ij,kji->k", s_inv, terms.precisions)
                if scale_delta:
                    value += n * np.log1p(-delta)
                    grad = grad - n * d / (1.0 - delta)
            case "trace":
                tr = float(np.trace(s_inv))
                grad = -np.einsum("ij,kjl,li->k", s_inv, terms.precisions, s_inv)
                value = tr
                if scale_delta:
                    value = (1.0 - delta) * tr
                    grad = -d * tr + (1.0 - delta) * grad
            case _:
                raise ValueError(f"Unknown size criterion '{criterion}'")
        return value, grad

    return fun


def _single(spec: IntersectionSpec, method, criterion: SizeCriterion) -> MethodResult:
    return MethodResult(method, spec[0], criterion, WeightVector(np.ones(1)))


def _optimize(
    spec: IntersectionSpec, method, criterion: SizeCriterion, scale_delta: bool, opts: SimplexOptions
) -> MethodResult:
    if len(spec) == 1:
        return _single(spec, method, criterion)
    terms = FusionTerms(spec)
    check_nonempty(spec, terms)
    found = minimize_on_simplex(fusion_objective(terms, criterion, scale_delta), len(spec), opts)
    weights = WeightVector.simplex(found.t)
    fusion = fuse_terms(terms, weights.weights)
    ellipsoid = fusion.outer(method != "covariance_intersection")
    return MethodResult(method, ellipsoid, criterion, weights, {"delta": fusion.delta, **found.to_json()})


def covariance_intersection(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SimplexOptions = SimplexOptions()
) -> MethodResult:
    return _optimize(spec, "covariance_intersection", criterion, False, opts)


def bounding_no_delta(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SimplexOptions = SimplexOptions()
) -> MethodResult:
    """Weights from covariance intersection, then the (1 - delta_t) shrink"""
    return _optimize(spec, "bounding_no_delta", criterion, False, opts)


def bounding_optimal(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SimplexOptions = SimplexOptions()
) -> MethodResult:
    return _optimize(spec, "bounding_optimal", criterion, True, opts)


def _best_pair_weight(terms: FusionTerms, criterion: SizeCriterion) -> float:
    fun = fusion_objective(terms, criterion, scale_delta=False)

    def value(w: float) -> float:
        return fun(np.array([w, 1.0 - w]))[0]

    # convex in w, so the coarse minimum brackets the optimum
    grid = np.linspace(0.0, 1.0, PAIR_GRID)
    values = [value(w) for w in grid]
    k = int(np.argmin(values))
    candidates = [float(grid[k])]
    if 0 < k < PAIR_GRID - 1 and values[k] < min(values[k - 1], values[k + 1]):
        bracket = (float(grid[k - 1]), float(grid[k]), float(grid[k + 1]))
        res = minimize_scalar(value, bracket=bracket, method="golden", options={"xtol": 1e-10})
        if 0.0 <= res.x <= 1.0:
            candidates.append(float(res.x))
    best_w, best_value = 0.5, value(0.5)
    for w in (*candidates, 0.0, 1.0):
        if (v := value(w)) < best_value - 1e-12:
            best_w, best_value = w, v
    return best_w


def recursive_bounding(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", scale_delta: bool = True
) -> MethodResult:
    """Folds the members in one at a time, each step a two-member fusion with a scalar weight.
    scale_delta=False is sequential covariance intersection."""
    if len(spec) == 1:
        return _single(spec, "recursive_bounding", criterion)
    check_nonempty(spec)
    current = spec[0]
    weights = []
    for k, e in enumerate(spec.ellipsoids[1:], start=1):
        pair = IntersectionSpec((current, e))
        terms = FusionTerms(pair)
        w = _best_pair_weight(terms, criterion)
        fusion = fuse_terms(terms, np.array([w, 1.0 - w]))
        if fusion.delta > 1.0 + EMPTY_MARGIN:
            raise EmptyIntersection(f"step {k} certifies an empty intersection (delta = {fusion.delta:.6g})")
        log_debug(f"recursive_bounding: step {k}, weight {w:.6f}, delta {fusion.delta:.6g}")
        current = fusion.outer(scale_delta)
        weights.append(w)
    return MethodResult(
        "recursive_bounding", current, criterion, diagnostics={"pair_weights": weights, "scale_delta": scale_delta}
    )
