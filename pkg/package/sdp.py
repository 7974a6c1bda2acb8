"""LMI relaxations of the smallest ellipsoid containing an intersection of ellipsoids.

The outer ellipsoid {x : (x - x0)^T P0^-1 (x - x0) <= 1} is parametrized by Q = P0^-1 and xt = Q x0. With
multipliers lam >= 0 the relaxed containment condition is the order 2n+1 LMI

    [[Q - sum lam_i P_i^-1,      -xt + sum lam_i P_i^-1 x_i,     0 ],
     [        .          , -1 - sum lam_i (x_i^T P_i^-1 x_i - 1),  xt^T],
     [        0          ,              xt                    ,   -Q ]]  <= 0

which is the S-procedure condition A0 <= sum lam_i A_i after a Schur complement on Q. Eliminating Q and xt
leaves an LMI of order n+1 in lam only.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from package.barrier import (
    AffineSymMap,
    LmiConstraint,
    LmiProblem,
    Objective,
    SolverOptions,
    SolverResult,
    eval_map,
    solve,
    svec,
    svec_size,
    sym_basis,
)
from package.bounding import FusionTerms, check_nonempty
from package.context import log_debug
from package.ellipsoid import (
    Ellipsoid,
    IntersectionSpec,
    SizeCriterion,
    Vector,
    eps_psd,
    quadratic_form,
    spd_inverse,
    sym,
)
from package.errors import DimensionMismatch, Infeasible
from package.results import MethodResult, MethodTag, WeightVector
from package.simplex import barycenter


def _objective(criterion: SizeCriterion, m: AffineSymMap) -> Objective:
    match criterion:
        case "logdet":
            return Objective.minimize_neg_logdet(m)
        case "trace":
            return Objective.minimize_trace_inv(m)
        case _:
            raise ValueError(f"Unknown size criterion '{criterion}'")


def _diagnostics(result: SolverResult) -> dict:
    return {"status": result.status, "solver_objective": result.objective, **result.diagnostics.to_json()}


def _embed(blocks: NDArray[np.float64], order: int, rows: slice, cols: slice) -> NDArray[np.float64]:
    out = np.zeros((blocks.shape[0], order, order))
    out[:, rows, cols] = blocks
    return out


def full_sdp_map(spec: IntersectionSpec) -> AffineSymMap:
    """The order 2n+1 relaxation map in [svec(Q), xt, lam], constrained to be negative semidefinite"""
    n, m = spec.dimension, len(spec)
    terms = FusionTerms(spec)
    order = 2 * n + 1
    top, mid, bottom = slice(0, n), n, slice(n + 1, order)

    constant = np.zeros((order, order))
    constant[mid, mid] = -1.0

    basis = sym_basis(n)
    q_coeffs = _embed(basis, order, top, top) - _embed(basis, order, bottom, bottom)

    x_coeffs = np.zeros((n, order, order))
    for j in range(n):
        x_coeffs[j, j, mid] = x_coeffs[j, mid, j] = -1.0
        x_coeffs[j, mid, n + 1 + j] = x_coeffs[j, n + 1 + j, mid] = 1.0

    lam_coeffs = np.zeros((m, order, order))
    for i in range(m):
        lam_coeffs[i, top, top] = -terms.precisions[i]
        lam_coeffs[i, top, mid] = lam_coeffs[i, mid, top] = terms.information[i]
        lam_coeffs[i, mid, mid] = -(terms.offsets[i] - 1.0)

    return AffineSymMap(constant, np.concatenate((q_coeffs, x_coeffs, lam_coeffs)))


def s_procedure_map(spec: IntersectionSpec) -> AffineSymMap:
    """sum tau_i A_i - A0 with A0 lifted by a Schur complement on Q, constrained to be positive semidefinite.

    Built from the quadratic forms A_i, in the same variables [svec(Q), xt, tau] as full_sdp_map."""
    n, m = spec.dimension, len(spec)
    order = 2 * n + 1
    head, tail = slice(0, n + 1), slice(n + 1, order)

    constant = np.zeros((order, order))
    constant[n, n] = 1.0

    basis = sym_basis(n)
    q_coeffs = _embed(basis, order, tail, tail)
    q_coeffs[:, :n, :n] -= basis

    x_coeffs = np.zeros((n, order, order))
    for j in range(n):
        x_coeffs[j, j, n] = x_coeffs[j, n, j] = 1.0
        x_coeffs[j, n, n + 1 + j] = x_coeffs[j, n + 1 + j, n] = -1.0

    forms = np.array([quadratic_form(e).matrix for e in spec])
    tau_coeffs = _embed(forms, order, head, head)
    return AffineSymMap(constant, np.concatenate((q_coeffs, x_coeffs, tau_coeffs)))


def _shape_map(n: int, n_vars: int) -> AffineSymMap:
    """Q as a map of the stacked variables, svec(Q) first"""
    coeffs = np.zeros((n_vars, n, n))
    coeffs[: svec_size(n)] = sym_basis(n)
    return AffineSymMap(np.zeros((n, n)), coeffs)


def _recover(y: Vector, n: int) -> Ellipsoid:
    nq = svec_size(n)
    q = np.tensordot(y[:nq], sym_basis(n), axes=1)
    shape = spd_inverse(sym(q))
    return Ellipsoid(shape @ y[nq : nq + n], shape)


def _solve_lifted(
    spec: IntersectionSpec,
    criterion: SizeCriterion,
    method: MethodTag,
    constraint: LmiConstraint,
    opts: SolverOptions,
) -> MethodResult:
    if len(spec) > 1:
        check_nonempty(spec)
    n, m = spec.dimension, len(spec)
    n_vars = svec_size(n) + n + m
    problem = LmiProblem(
        n_vars,
        _objective(criterion, _shape_map(n, n_vars)),
        (constraint,),
        nonneg=tuple(range(n_vars - m, n_vars)),
    )
    result = solve(problem, opts).raise_for_status()
    lam = result.y[n_vars - m :]
    return MethodResult(
        method, _recover(result.y, n), criterion, WeightVector.nonnegative(lam), _diagnostics(result)
    )


def full_sdp(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SolverOptions = SolverOptions()
) -> MethodResult:
    return _solve_lifted(spec, criterion, "full_sdp", LmiConstraint(full_sdp_map(spec), "nsd"), opts)


def s_procedure(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SolverOptions = SolverOptions()
) -> MethodResult:
    return _solve_lifted(spec, criterion, "s_procedure", LmiConstraint(s_procedure_map(spec), "psd"), opts)


def _check_multipliers(spec: IntersectionSpec, weights: WeightVector | ArrayLike) -> Vector:
    tau = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, dtype=np.float64)
    if tau.shape != (len(spec),):
        raise DimensionMismatch(f"{tau.shape[0]} multipliers for {len(spec)} ellipsoids")
    if np.any(tau < 0):
        raise ValueError("multipliers must be nonnegative")
    return tau


def s_procedure_holds(
    candidate: Ellipsoid, spec: IntersectionSpec, tau: WeightVector | ArrayLike, tol: float | None = None
) -> bool:
    """A0 <= sum tau_i A_i, a sufficient condition for the intersection to lie inside candidate"""
    t = _check_multipliers(spec, tau)
    forms = np.array([quadratic_form(e).matrix for e in spec])
    d = sym(np.tensordot(t, forms, axes=1) - quadratic_form(candidate).matrix)
    return bool(np.linalg.eigvalsh(d)[0] >= -(eps_psd(d) if tol is None else tol))


def sdp_relaxation_holds(
    candidate: Ellipsoid, spec: IntersectionSpec, lam: WeightVector | ArrayLike, tol: float | None = None
) -> bool:
    """Evaluates the order 2n+1 relaxation LMI at Q = P0^-1, xt = P0^-1 x0"""
    t = _check_multipliers(spec, lam)
    q = candidate.precision
    y = np.concatenate((svec(q), q @ candidate.center, t))
    value = eval_map(full_sdp_map(spec), y)
    return bool(np.linalg.eigvalsh(value)[-1] <= (eps_psd(value) if tol is None else tol))


def find_s_procedure_multipliers(
    candidate: Ellipsoid, spec: IntersectionSpec, opts: SolverOptions = SolverOptions()
) -> WeightVector | None:
    """Looks for tau >= 0 with A0 <= sum tau_i A_i by minimizing the eigenvalue shift s in

        sum tau_i A_i - A0 + s I >= 0

    The certificate exists iff the optimal shift is not positive. None otherwise.
    """
    m = len(spec)
    a0 = quadratic_form(candidate).matrix
    forms = np.array([quadratic_form(e).matrix for e in spec])
    order = a0.shape[0]
    cert = AffineSymMap(-a0, np.concatenate((forms, np.eye(order)[None])))
    bound = 1e6 * (1.0 + float(np.abs(a0).max()))
    box_coeffs = np.zeros((m + 1, m, m))
    for i in range(m):
        box_coeffs[i, i, i] = -1.0
    box = AffineSymMap(bound * np.eye(m), box_coeffs)
    problem = LmiProblem(
        m + 1,
        Objective.minimize_linear(np.append(np.zeros(m), 1.0)),
        (LmiConstraint(cert, "psd"), LmiConstraint(box, "psd")),
        nonneg=tuple(range(m)),
    )
    worst = float(np.linalg.eigvalsh(eval_map(cert, np.append(np.ones(m), 0.0)))[0])
    start = np.append(np.ones(m), 1.0 + max(-worst, 0.0))
    result = solve(problem, opts, start=start)
    shift = float(result.y[m])
    log_debug(f"find_s_procedure_multipliers: optimal shift {shift:.3g}")
    if result.status == "infeasible" or shift > 1e-7 * (1.0 + float(np.abs(a0).sum(axis=1).max())):
        return None
    return WeightVector.nonnegative(result.y[:m])


def decoupled_map(spec: IntersectionSpec) -> AffineSymMap:
    """[[1 + sum lam_i (x_i^T P_i^-1 x_i - 1), (sum lam_i P_i^-1 x_i)^T], [sum lam_i P_i^-1 x_i, sum lam_i P_i^-1]]"""
    n, m = spec.dimension, len(spec)
    terms = FusionTerms(spec)
    constant = np.zeros((n + 1, n + 1))
    constant[0, 0] = 1.0
    coeffs = np.zeros((m, n + 1, n + 1))
    coeffs[:, 0, 0] = terms.offsets - 1.0
    coeffs[:, 0, 1:] = terms.information
    coeffs[:, 1:, 0] = terms.information
    coeffs[:, 1:, 1:] = terms.precisions
    return AffineSymMap(constant, coeffs)


def decoupled_start(spec: IntersectionSpec) -> Vector | None:
    """lam = tbar / (2 (1 - delta)) at the barycenter tbar, strictly feasible while delta < 1"""
    delta = check_nonempty(spec)
    if delta >= 1.0:
        return None
    return barycenter(len(spec)) / (2.0 * (1.0 - max(delta, 0.0)))


def decoupled_sdp(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SolverOptions = SolverOptions()
) -> MethodResult:
    n, m = spec.dimension, len(spec)
    terms = FusionTerms(spec)
    lmi = decoupled_map(spec)
    information = AffineSymMap(np.zeros((n, n)), terms.precisions)
    problem = LmiProblem(m, _objective(criterion, information), (LmiConstraint(lmi, "psd"),), nonneg=tuple(range(m)))
    result = solve(problem, opts, start=decoupled_start(spec)).raise_for_status()

    lam = np.maximum(result.y, 0.0)
    s = np.einsum("k,kij->ij", lam, terms.precisions)
    shape = spd_inverse(s)
    center = shape @ (lam @ terms.information)
    return MethodResult(
        "decoupled_sdp", Ellipsoid(center, shape), criterion, WeightVector.nonnegative(lam), _diagnostics(result)
    )


def lift_decoupled(spec: IntersectionSpec, lam: ArrayLike) -> Vector:
    """[svec(Q), xt, lam] for Q = sum lam_i P_i^-1 and xt = sum lam_i P_i^-1 x_i"""
    terms = FusionTerms(spec)
    weights = np.asarray(lam, dtype=np.float64)
    q = np.einsum("k,kij->ij", weights, terms.precisions)
    return np.concatenate((svec(q), weights @ terms.information, weights))


def inscribed_maps(spec: IntersectionSpec) -> list[AffineSymMap]:
    """One order 2n+1 map per member in [svec(E), center, tau], each constrained to be negative semidefinite.

    [[-P_i, x_i - center, E], [., tau_i - 1, 0], [E, 0, -tau_i I]] <= 0 holds iff {E u + center : |u| <= 1}
    lies inside member i."""
    n, m = spec.dimension, len(spec)
    order = 2 * n + 1
    nq = svec_size(n)
    basis = sym_basis(n)
    maps = []
    for i, e in enumerate(spec):
        constant = np.zeros((order, order))
        constant[:n, :n] = -e.shape
        constant[:n, n] = constant[n, :n] = e.center
        constant[n, n] = -1.0

        e_coeffs = _embed(basis, order, slice(0, n), slice(n + 1, order)) + _embed(
            basis, order, slice(n + 1, order), slice(0, n)
        )
        x_coeffs = np.zeros((n, order, order))
        for j in range(n):
            x_coeffs[j, j, n] = x_coeffs[j, n, j] = -1.0
        tau_coeffs = np.zeros((m, order, order))
        tau_coeffs[i, n, n] = 1.0
        tau_coeffs[i, n + 1 :, n + 1 :] = -np.eye(n)
        maps.append(AffineSymMap(constant, np.concatenate((e_coeffs, x_coeffs, tau_coeffs))))
    return maps


def max_inscribed(spec: IntersectionSpec, opts: SolverOptions = SolverOptions()) -> tuple[Ellipsoid, WeightVector]:
    """Largest-volume ellipsoid inside every member, as (ellipsoid, multipliers)"""
    n, m = spec.dimension, len(spec)
    nq = svec_size(n)
    n_vars = nq + n + m
    problem = LmiProblem(
        n_vars,
        Objective.minimize_neg_logdet(_shape_map(n, n_vars)),
        tuple(LmiConstraint(mp, "nsd") for mp in inscribed_maps(spec)),
        nonneg=tuple(range(nq + n, n_vars)),
    )
    result = solve(problem, opts)
    if result.status == "infeasible":
        raise Infeasible("the intersection has no interior, no ellipsoid fits inside")
    result.raise_for_status()
    factor = sym(np.tensordot(result.y[:nq], sym_basis(n), axes=1))
    return Ellipsoid(result.y[nq : nq + n], sym(factor @ factor)), WeightVector.nonnegative(result.y[nq + n :])


def inscribed_inflate(
    spec: IntersectionSpec, criterion: SizeCriterion = "logdet", opts: SolverOptions = SolverOptions()
) -> MethodResult:
    """The inscribed ellipsoid inflated n times about its center"""
    inner, tau = max_inscribed(spec, opts)
    n = spec.dimension
    outer = Ellipsoid(inner.center, n * n * inner.shape)
    return MethodResult(
        "inscribed_inflate", outer, criterion, tau, {"inscribed": inner.to_json(), "inflation": float(n)}
    )
