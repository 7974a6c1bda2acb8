import numpy as np
import pytest

from package.barrier import (
    AffineSymMap,
    LmiConstraint,
    LmiProblem,
    Objective,
    SolverOptions,
    eval_map,
    phase1,
    smat,
    solve,
    svec,
    sym_basis,
)
from package.errors import DimensionMismatch, Infeasible, OptimizerFailed
from package.sdp import decoupled_map


def scalar_identity(n: int, constant: float = 0.0) -> AffineSymMap:
    """constant * I + y * I"""
    return AffineSymMap(constant * np.eye(n), np.eye(n)[None])


def test_svec_is_an_isometry(rng):
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))
    a, b = a + a.T, b + b.T
    assert svec(a) @ svec(b) == pytest.approx(np.sum(a * b))
    assert np.allclose(smat(svec(a), 3), a)
    basis = sym_basis(3)
    gram = np.einsum("aij,bij->ab", basis, basis)
    assert np.allclose(gram, np.eye(6))


def test_eval_map_examples():
    assert np.allclose(eval_map(AffineSymMap(np.eye(2), np.zeros((0, 2, 2))), []), np.eye(2))
    assert np.allclose(eval_map(scalar_identity(2), [3.0]), 3.0 * np.eye(2))
    with pytest.raises(DimensionMismatch):
        eval_map(scalar_identity(2), [1.0, 2.0])


def test_decoupled_map_value(intervals):
    assert np.allclose(eval_map(decoupled_map(intervals), [0.5, 0.5]), [[0.5, 0.5], [0.5, 1.0]])


def test_reject_invalid_maps_and_problems():
    with pytest.raises(DimensionMismatch):
        AffineSymMap(np.eye(2), np.array([[[0.0, 1.0], [0.0, 0.0]]]))
    with pytest.raises(DimensionMismatch):
        LmiProblem(2, Objective.minimize_linear([1.0, 0.0]), (LmiConstraint(scalar_identity(2), "psd"),))
    with pytest.raises(ValueError):
        LmiProblem(1, Objective.minimize_linear([1.0]))
    with pytest.raises(ValueError):
        SolverOptions(mu_growth=1.0)


def test_minimize_linear():
    # y >= 1 as y I - I >= 0
    problem = LmiProblem(1, Objective.minimize_linear([1.0]), (LmiConstraint(scalar_identity(2, -1.0), "psd"),))
    result = solve(problem)
    assert result.ok
    assert result.y[0] == pytest.approx(1.0, abs=1e-6)
    assert problem.is_feasible(result.y)


def test_minimize_neg_logdet():
    problem = LmiProblem(
        1,
        Objective.minimize_neg_logdet(scalar_identity(2)),
        (LmiConstraint(scalar_identity(2, -2.0), "nsd"),),
        nonneg=(0,),
    )
    result = solve(problem)
    assert result.ok
    assert result.y[0] == pytest.approx(2.0, abs=1e-6)
    assert result.objective == pytest.approx(-2.0 * np.log(2.0), abs=1e-6)
    assert problem.is_feasible(result.y)


def test_minimize_trace_inv():
    problem = LmiProblem(
        1,
        Objective.minimize_trace_inv(scalar_identity(2)),
        (LmiConstraint(scalar_identity(2, -2.0), "nsd"),),
        nonneg=(0,),
    )
    result = solve(problem)
    assert result.ok
    assert result.y[0] == pytest.approx(2.0, abs=1e-6)
    assert result.objective == pytest.approx(1.0, abs=1e-6)


def test_infeasible_problem():
    # y + 1 <= 0 and y >= 0
    problem = LmiProblem(
        1, Objective.minimize_linear([1.0]), (LmiConstraint(scalar_identity(1, 1.0), "nsd"),), nonneg=(0,)
    )
    result = solve(problem)
    assert result.status == "infeasible"
    with pytest.raises(Infeasible):
        result.raise_for_status()


def test_iteration_limit():
    problem = LmiProblem(1, Objective.minimize_linear([1.0]), (LmiConstraint(scalar_identity(1, -1.0), "psd"),))
    result = solve(problem, SolverOptions(max_outer=2))
    assert result.status == "max_iterations"
    with pytest.raises(OptimizerFailed):
        result.raise_for_status()


def test_phase1_examples(static):
    problem = LmiProblem(
        1, Objective.minimize_linear([0.0]), (LmiConstraint(scalar_identity(2, -2.0), "nsd"),), nonneg=(0,)
    )
    y = phase1(problem)
    assert y is not None and 0.0 < y[0] < 2.0

    constant_infeasible = AffineSymMap(np.eye(2), np.zeros((1, 2, 2)))
    problem = LmiProblem(1, Objective.minimize_linear([0.0]), (LmiConstraint(constant_infeasible, "nsd"),))
    assert phase1(problem) is None

    m = len(static)
    problem = LmiProblem(
        m,
        Objective.minimize_linear(np.zeros(m)),
        (LmiConstraint(decoupled_map(static), "psd"),),
        nonneg=tuple(range(m)),
    )
    lam = phase1(problem)
    assert lam is not None
    assert np.all(lam > 0)
    assert np.linalg.eigvalsh(eval_map(decoupled_map(static), lam))[0] > 0


def test_infeasible_start_runs_phase1():
    problem = LmiProblem(
        1,
        Objective.minimize_neg_logdet(scalar_identity(2)),
        (LmiConstraint(scalar_identity(2, -2.0), "nsd"),),
        nonneg=(0,),
    )
    result = solve(problem, start=[5.0])
    assert result.y[0] == pytest.approx(2.0, abs=1e-6)


def test_unconverged_centering_is_not_optimal(warnings):
    problem = LmiProblem(
        1,
        Objective.minimize_neg_logdet(scalar_identity(2)),
        (LmiConstraint(scalar_identity(2, -2.0), "nsd"),),
        nonneg=(0,),
    )
    result = solve(problem, SolverOptions(max_newton=1), start=[0.5])
    assert result.status == "not_centered"
    assert not result.ok
    with pytest.raises(OptimizerFailed):
        result.raise_for_status()
