"""Dense log-barrier path-following solver for small LMI-constrained convex problems.

Problems have the form

    minimize    phi(y)
    subject to  M_k(y) <= 0 or M_k(y) >= 0   (affine symmetric matrix maps)
                y_j >= 0                     (j in the nonnegative index set)

where phi is linear, -logdet(G(y)) or trace(G(y)^-1) for an affine map G. The trace-of-inverse
objective is rewritten with an epigraph variable Z and the LMI [[Z, I], [I, G(y)]] >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from package.context import log_debug, log_warning
from package.ellipsoid import SymMatrix, Vector, as_vector, eps_psd, sym
from package.errors import DimensionMismatch, Infeasible, OptimizerFailed

type Sense = Literal["psd", "nsd"]
type ObjectiveKind = Literal["linear", "neg_logdet", "trace_inv"]
type SolverStatus = Literal["optimal", "max_iterations", "not_centered", "infeasible"]

SQRT2 = np.sqrt(2.0)


def sym_basis(n: int) -> NDArray[np.float64]:
    """Orthonormal basis of n x n symmetric matrices, off-diagonal elements scaled by 1/sqrt(2)"""
    basis = []
    for i in range(n):
        for j in range(i, n):
            b = np.zeros((n, n))
            if i == j:
                b[i, i] = 1.0
            else:
                b[i, j] = b[j, i] = 1.0 / SQRT2
            basis.append(b)
    return np.array(basis).reshape(-1, n, n)


def svec(m: SymMatrix) -> Vector:
    n = m.shape[0]
    return np.array([m[i, j] if i == j else SQRT2 * m[i, j] for i in range(n) for j in range(i, n)])


def smat(v: ArrayLike, n: int) -> SymMatrix:
    return np.tensordot(as_vector(v), sym_basis(n), axes=1)


def svec_size(n: int) -> int:
    return n * (n + 1) // 2


@dataclass(frozen=True, eq=False)
class AffineSymMap:
    """M(y) = constant + sum_j y_j * coefficients[j]"""

    constant: SymMatrix
    coefficients: NDArray[np.float64]

    def __post_init__(self):
        constant = np.atleast_2d(np.asarray(self.constant, dtype=np.float64))
        d = constant.shape[0]
        coefficients = np.asarray(self.coefficients, dtype=np.float64).reshape(-1, d, d)
        if constant.shape != (d, d):
            raise DimensionMismatch(f"constant block must be square, got {constant.shape}")
        for block in (constant, *coefficients):
            if np.abs(block - block.T).max(initial=0.0) > 1e-12 * (1.0 + np.abs(block).max(initial=0.0)):
                raise DimensionMismatch("affine map blocks must be symmetric")
        object.__setattr__(self, "constant", sym(constant))
        object.__setattr__(self, "coefficients", (coefficients + coefficients.transpose(0, 2, 1)) / 2)

    @property
    def order(self) -> int:
        return self.constant.shape[0]

    @property
    def n_vars(self) -> int:
        return self.coefficients.shape[0]

    def negated(self) -> AffineSymMap:
        return AffineSymMap(-self.constant, -self.coefficients)

    def padded(self, n_vars: int) -> AffineSymMap:
        extra = np.zeros((n_vars - self.n_vars, self.order, self.order))
        return AffineSymMap(self.constant, np.concatenate((self.coefficients, extra)))

    def shifted(self) -> AffineSymMap:
        """Appends one variable s entering as s * I"""
        return AffineSymMap(self.constant, np.concatenate((self.coefficients, np.eye(self.order)[None])))


def eval_map(m: AffineSymMap, y: ArrayLike) -> SymMatrix:
    v = np.asarray(y, dtype=np.float64).reshape(-1)
    if v.shape[0] != m.n_vars:
        raise DimensionMismatch(f"map has {m.n_vars} variables, got a vector of length {v.shape[0]}")
    return m.constant + np.tensordot(v, m.coefficients, axes=1)


@dataclass(frozen=True, eq=False)
class LmiConstraint:
    map: AffineSymMap
    sense: Sense

    @property
    def psd_map(self) -> AffineSymMap:
        return self.map if self.sense == "psd" else self.map.negated()


@dataclass(frozen=True, eq=False)
class Objective:
    kind: ObjectiveKind
    linear: Vector | None = None
    map: AffineSymMap | None = None

    @staticmethod
    def minimize_linear(c: ArrayLike) -> Objective:
        return Objective("linear", linear=as_vector(c))

    @staticmethod
    def minimize_neg_logdet(m: AffineSymMap) -> Objective:
        return Objective("neg_logdet", map=m)

    @staticmethod
    def minimize_trace_inv(m: AffineSymMap) -> Objective:
        return Objective("trace_inv", map=m)

    def value(self, y: Vector) -> float:
        match self.kind:
            case "linear":
                assert self.linear is not None
                return float(self.linear @ y)
            case "neg_logdet":
                assert self.map is not None
                sign, logdet = np.linalg.slogdet(eval_map(self.map, y))
                return -float(logdet) if sign > 0 else float("inf")
            case "trace_inv":
                assert self.map is not None
                g = eval_map(self.map, y)
                try:
                    return float(np.trace(cho_solve(cho_factor(g, lower=True), np.eye(g.shape[0]))))
                except np.linalg.LinAlgError:
                    return float("inf")
            case _:
                raise ValueError(f"Unknown objective kind '{self.kind}'")


@dataclass(frozen=True, eq=False)
class LmiProblem:
    n_vars: int
    objective: Objective
    constraints: tuple[LmiConstraint, ...] = ()
    nonneg: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "nonneg", tuple(sorted(set(self.nonneg))))
        if len(self.constraints) == 0 and len(self.nonneg) == 0:
            raise ValueError("an LMI problem needs at least one constraint or nonnegative variable")
        for c in self.constraints:
            if c.map.n_vars != self.n_vars:
                raise DimensionMismatch(f"constraint has {c.map.n_vars} variables, problem has {self.n_vars}")
        if self.objective.map is not None and self.objective.map.n_vars != self.n_vars:
            raise DimensionMismatch("objective map does not match the problem's variable count")
        if self.objective.linear is not None and self.objective.linear.shape[0] != self.n_vars:
            raise DimensionMismatch("objective coefficients do not match the problem's variable count")
        if any(j < 0 or j >= self.n_vars for j in self.nonneg):
            raise DimensionMismatch("nonnegative index out of range")

    @property
    def domain_maps(self) -> list[AffineSymMap]:
        """Maps that must stay positive definite: the constraints plus the objective's own map"""
        maps = [c.psd_map for c in self.constraints]
        if self.objective.kind != "linear" and self.objective.map is not None:
            maps.append(self.objective.map)
        return maps

    def min_slack_eigenvalues(self, y: Vector) -> list[float]:
        return [float(np.linalg.eigvalsh(eval_map(c.psd_map, y))[0]) for c in self.constraints]

    def is_feasible(self, y: Vector, tol: float | None = None) -> bool:
        for c in self.constraints:
            slack = eval_map(c.psd_map, y)
            if np.linalg.eigvalsh(slack)[0] < -(eps_psd(slack) if tol is None else tol):
                return False
        return all(y[j] >= -1e-12 for j in self.nonneg)


@dataclass(frozen=True)
class SolverOptions:
    mu_growth: float = 8.0
    mu_initial: float = 1.0
    newton_tol: float = 1e-9
    path_tol: float = 1e-8
    max_outer: int = 60
    max_newton: int = 50
    phase1_margin: float = 1e-6

    def __post_init__(self):
        if self.mu_growth <= 1:
            raise ValueError("mu_growth must be greater than 1")
        if min(self.mu_initial, self.newton_tol, self.path_tol, self.max_outer, self.max_newton) <= 0:
            raise ValueError("solver options must be positive")


@dataclass
class SolverDiagnostics:
    mu: float = 0.0
    newton_decrement: float = float("nan")
    min_slack_eigenvalues: list[float] = field(default_factory=list)
    outer_iterations: int = 0
    newton_steps: int = 0

    def to_json(self):
        return {
            "mu": self.mu,
            "newton_decrement": self.newton_decrement,
            "min_slack_eigenvalues": self.min_slack_eigenvalues,
            "outer_iterations": self.outer_iterations,
            "newton_steps": self.newton_steps,
        }


@dataclass(frozen=True, eq=False)
class SolverResult:
    y: Vector
    objective: float
    status: SolverStatus
    diagnostics: SolverDiagnostics

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def raise_for_status(self) -> SolverResult:
        match self.status:
            case "infeasible":
                raise Infeasible("no strictly feasible point found")
            case "max_iterations":
                raise OptimizerFailed(
                    f"barrier method stopped after {self.diagnostics.outer_iterations} outer iterations "
                    f"(mu = {self.diagnostics.mu:.3g})"
                )
            case "not_centered":
                raise OptimizerFailed(
                    f"last centering stopped with Newton decrement {self.diagnostics.newton_decrement:.3g} "
                    f"(mu = {self.diagnostics.mu:.3g})"
                )
        return self


class _Barrier:
    """t * c^T y - t * logdet G(y) - sum_k logdet F_k(y) - sum_i log(a_i^T y + b_i)"""

    def __init__(
        self,
        maps: Sequence[AffineSymMap],
        lin_a: NDArray[np.float64],
        lin_b: NDArray[np.float64],
        c: Vector | None = None,
        logdet_map: AffineSymMap | None = None,
    ):
        self.maps = list(maps)
        self.lin_a = lin_a
        self.lin_b = lin_b
        self.c = c
        self.logdet_map = logdet_map

    @property
    def dimension(self) -> int:
        return sum(m.order for m in self.maps) + self.lin_b.shape[0]

    @staticmethod
    def _logdet(m: AffineSymMap, y: Vector) -> tuple[float, NDArray[np.float64]] | None:
        try:
            lower = np.linalg.cholesky(eval_map(m, y))
        except np.linalg.LinAlgError:
            return None
        diag = np.diag(lower)
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            return None
        return 2.0 * float(np.sum(np.log(diag))), lower

    def value(self, y: Vector, t: float) -> float | None:
        total = 0.0
        for m in self.maps:
            if (res := self._logdet(m, y)) is None:
                return None
            total -= res[0]
        if self.lin_b.shape[0] > 0:
            r = self.lin_a @ y + self.lin_b
            if np.any(r <= 0):
                return None
            total -= float(np.sum(np.log(r)))
        if self.logdet_map is not None:
            if (res := self._logdet(self.logdet_map, y)) is None:
                return None
            total -= t * res[0]
        if self.c is not None:
            total += t * float(self.c @ y)
        return total

    @staticmethod
    def _add_logdet_terms(m: AffineSymMap, lower, weight: float, grad: Vector, hess: NDArray):
        if m.n_vars == 0:
            return
        linv = solve_triangular(lower, np.eye(m.order), lower=True)
        a = linv @ m.coefficients @ linv.T
        flat = a.reshape(m.n_vars, -1)
        grad -= weight * np.einsum("kii->k", a)
        hess += weight * (flat @ flat.T)

    def derivatives(self, y: Vector, t: float) -> tuple[float, Vector, NDArray[np.float64]] | None:
        p = y.shape[0]
        grad = np.zeros(p)
        hess = np.zeros((p, p))
        total = 0.0
        for m in self.maps:
            if (res := self._logdet(m, y)) is None:
                return None
            total -= res[0]
            self._add_logdet_terms(m, res[1], 1.0, grad, hess)
        if self.lin_b.shape[0] > 0:
            r = self.lin_a @ y + self.lin_b
            if np.any(r <= 0):
                return None
            total -= float(np.sum(np.log(r)))
            grad -= self.lin_a.T @ (1.0 / r)
            hess += self.lin_a.T @ (self.lin_a / (r**2)[:, None])
        if self.logdet_map is not None:
            if (res := self._logdet(self.logdet_map, y)) is None:
                return None
            total -= t * res[0]
            self._add_logdet_terms(self.logdet_map, res[1], t, grad, hess)
        if self.c is not None:
            total += t * float(self.c @ y)
            grad += t * self.c
        return total, grad, hess


def _newton_direction(hess: NDArray[np.float64], grad: Vector) -> Vector:
    try:
        factor = cho_factor(hess, lower=True)
        if np.min(np.abs(np.diag(factor[0]))) ** 2 > 1e-12 * (1.0 + np.abs(np.diag(hess)).max()):
            return -cho_solve(factor, grad)
    except np.linalg.LinAlgError:
        pass
    # Flat directions appear when members coincide
    reg = hess + 1e-10 * (1.0 + np.abs(np.diag(hess)).max()) * np.eye(hess.shape[0])
    return -np.linalg.solve(reg, grad)


@dataclass
class _Centering:
    y: Vector
    decrement: float
    steps: int
    converged: bool
    stopped: bool = False


def _center(
    barrier: _Barrier, y: Vector, t: float, opts: SolverOptions, stop: Callable[[Vector], bool] | None
) -> _Centering:
    decrement = float("inf")
    for step in range(opts.max_newton):
        if (res := barrier.derivatives(y, t)) is None:
            raise OptimizerFailed("iterate left the interior of the feasible set")
        value, grad, hess = res
        direction = _newton_direction(hess, grad)
        slope = float(grad @ direction)
        decrement = max(-slope, 0.0)
        if decrement / 2 <= opts.newton_tol:
            return _Centering(y, decrement, step, converged=True)

        s = 1.0
        quadratic_phase = np.sqrt(decrement) < 0.25
        while s > 1e-20:
            trial = barrier.value(y + s * direction, t)
            # Inside the quadratic convergence region the full step only has to stay feasible
            if trial is not None and (quadratic_phase or trial <= value + 1e-4 * s * slope):
                break
            s *= 0.5
        else:
            return _Centering(y, decrement, step, converged=False)
        y = y + s * direction
        if stop is not None and stop(y):
            return _Centering(y, decrement, step + 1, converged=False, stopped=True)
    return _Centering(y, decrement, opts.max_newton, converged=False)


@dataclass
class _Path:
    y: Vector
    status: SolverStatus
    diagnostics: SolverDiagnostics
    stopped: bool = False


def _follow_path(
    barrier: _Barrier,
    y: Vector,
    opts: SolverOptions,
    stop: Callable[[Vector], bool] | None = None,
) -> _Path:
    diagnostics = SolverDiagnostics()
    t = opts.mu_initial
    nu = max(barrier.dimension, 1)
    for outer in range(opts.max_outer):
        centering = _center(barrier, y, t, opts, stop)
        y = centering.y
        diagnostics.mu = t
        diagnostics.outer_iterations = outer + 1
        diagnostics.newton_steps += centering.steps
        diagnostics.newton_decrement = centering.decrement
        if centering.stopped:
            return _Path(y, "optimal", diagnostics, stopped=True)
        if not centering.converged:
            log_debug(f"barrier: centering at mu = {t:.3g} stopped with decrement {centering.decrement:.3g}")
        if nu / t <= opts.path_tol:
            if not centering.converged:
                log_warning(f"barrier: final centering did not reach the Newton tolerance at mu = {t:.3g}")
                return _Path(y, "not_centered", diagnostics)
            return _Path(y, "optimal", diagnostics)
        t *= opts.mu_growth
    log_warning(f"barrier method hit {opts.max_outer} outer iterations")
    return _Path(y, "max_iterations", diagnostics)


def _nonneg_rows(n_vars: int, nonneg: Sequence[int]) -> NDArray[np.float64]:
    return np.eye(n_vars)[list(nonneg)].reshape(-1, n_vars)


def _min_eig(m: AffineSymMap, y: Vector) -> float:
    return float(np.linalg.eigvalsh(eval_map(m, y))[0])


def phase1(
    problem: LmiProblem, opts: SolverOptions = SolverOptions(), start: ArrayLike | None = None
) -> Vector | None:
    """Finds y with every slack (and the objective's domain map) at least `phase1_margin` positive definite.

    Solves minimize s subject to F_k(y) + s I >= 0, y_j + s >= 0, s >= -1 and a large box on y, stopping as
    soon as s drops below -margin. None when the optimal s is not negative.
    """
    p = problem.n_vars
    margin = opts.phase1_margin
    y0 = np.zeros(p) if start is None else as_vector(start).copy()
    maps = problem.domain_maps
    nonneg = list(problem.nonneg)

    worst = max([-_min_eig(m, y0) for m in maps] + [-y0[j] for j in nonneg] + [0.0])
    s0 = worst + 1.0
    radius = 1e6 * (1.0 + float(np.abs(y0).max(initial=0.0)))

    shifted = [m.padded(p).shifted() for m in maps]
    rows = [np.append(np.eye(p)[j], 1.0) for j in nonneg]
    offsets = [0.0] * len(nonneg)
    rows.append(np.append(np.zeros(p), 1.0))  # s >= -1
    offsets.append(1.0)
    for j in range(p):
        rows += [np.append(-np.eye(p)[j], 0.0), np.append(np.eye(p)[j], 0.0)]
        offsets += [radius, radius]
    c = np.append(np.zeros(p), 1.0)
    barrier = _Barrier(shifted, np.array(rows).reshape(-1, p + 1), np.array(offsets), c=c)

    def strictly_feasible(z: Vector) -> bool:
        y = z[:p]
        return all(_min_eig(m, y) >= margin for m in maps) and all(y[j] >= margin for j in nonneg)

    def stop(z: Vector) -> bool:
        return z[p] <= -margin and strictly_feasible(z)

    z0 = np.append(y0, s0)
    if strictly_feasible(z0):
        return y0
    try:
        path = _follow_path(barrier, z0, replace(opts, max_outer=max(opts.max_outer, 40)), stop)
    except OptimizerFailed:
        return None
    if path.stopped or strictly_feasible(path.y):
        return path.y[:p]
    log_debug(f"phase1: optimal shift s = {path.y[p]:.3g}, no strictly feasible point")
    return None


def _trace_inv_epigraph(maps: list[AffineSymMap], g: AffineSymMap, p: int):
    """Adds svec(Z) variables, the LMI [[Z, I], [I, G(y)]] >= 0 and the objective trace(Z)"""
    d = g.order
    nz = svec_size(d)
    basis = sym_basis(d)
    coeffs = np.zeros((g.n_vars + nz, 2 * d, 2 * d))
    coeffs[: g.n_vars, d:, d:] = g.coefficients
    coeffs[g.n_vars :, :d, :d] = basis
    big = AffineSymMap(np.block([[np.zeros((d, d)), np.eye(d)], [np.eye(d), g.constant]]), coeffs)
    extended = [m.padded(p + nz) for m in maps] + [big]
    c = np.concatenate((np.zeros(p), np.einsum("kii->k", basis)))
    return extended, c, nz


def solve(problem: LmiProblem, opts: SolverOptions = SolverOptions(), start: ArrayLike | None = None) -> SolverResult:
    p = problem.n_vars
    maps = problem.domain_maps
    nonneg = list(problem.nonneg)

    y0: Vector | None = None
    if start is not None:
        candidate = as_vector(start)
        if all(_min_eig(m, candidate) > 0 for m in maps) and all(candidate[j] > 0 for j in nonneg):
            y0 = candidate.copy()
        else:
            log_debug("solve: start point is not strictly feasible, running phase 1")
    if y0 is None:
        y0 = phase1(problem, opts)
    if y0 is None:
        return SolverResult(np.zeros(p), float("nan"), "infeasible", SolverDiagnostics())

    objective = problem.objective
    match objective.kind:
        case "linear":
            assert objective.linear is not None
            barrier = _Barrier(maps, _nonneg_rows(p, nonneg), np.zeros(len(nonneg)), c=objective.linear)
            z0 = y0
        case "neg_logdet":
            assert objective.map is not None
            # The objective map is already part of `maps` as a domain constraint, drop it there
            barrier = _Barrier(maps[:-1], _nonneg_rows(p, nonneg), np.zeros(len(nonneg)), logdet_map=objective.map)
            z0 = y0
        case "trace_inv":
            assert objective.map is not None
            extended, c, nz = _trace_inv_epigraph(maps[:-1], objective.map, p)
            rows = np.hstack((_nonneg_rows(p, nonneg), np.zeros((len(nonneg), nz))))
            barrier = _Barrier(extended, rows, np.zeros(len(nonneg)), c=c)
            g0 = eval_map(objective.map, y0)
            z = sym(np.linalg.inv(g0)) + np.eye(g0.shape[0])
            z0 = np.concatenate((y0, svec(z)))
        case _:
            raise ValueError(f"Unknown objective kind '{objective.kind}'")

    path = _follow_path(barrier, z0, opts)
    y = path.y[:p]
    path.diagnostics.min_slack_eigenvalues = problem.min_slack_eigenvalues(y)
    status = path.status
    if status == "optimal" and not problem.is_feasible(y):
        log_warning(f"barrier: accepted point violates a constraint, slacks {path.diagnostics.min_slack_eigenvalues}")
        status = "not_centered"
    return SolverResult(y, objective.value(y), status, path.diagnostics)
