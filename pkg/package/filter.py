"""Set-membership filtering for x_{k+1} = F x_k + w_k, y_k^i = x_k + v_k^i with ellipsoidal noise bounds"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from package.context import log_warning
from package.ellipsoid import (
    Ellipsoid,
    IntersectionSpec,
    SizeCriterion,
    SymMatrix,
    Vector,
    as_sym_matrix,
    as_vector,
    cholesky,
    sym,
)
from package.errors import (
    DegenerateTrace,
    DimensionMismatch,
    Infeasible,
    NotPositiveDefinite,
    OptimizerFailed,
    SingularCombination,
)
from package.methods import MethodOptions, run_method
from package.results import MethodResult, MethodTag


@dataclass(frozen=True, eq=False)
class LinearDynamics:
    transition: NDArray[np.float64]
    process: SymMatrix
    sensors: tuple[SymMatrix, ...]
    period: float = 1.0

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.transition, dtype=np.float64))
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise DimensionMismatch(f"transition must be square, got shape {f.shape}")
        n = f.shape[0]
        q = as_sym_matrix(self.process, "process noise shape")
        sensors = tuple(as_sym_matrix(r, f"sensor {i + 1} noise shape") for i, r in enumerate(self.sensors))
        for m in (q, *sensors):
            if m.shape[0] != n:
                raise DimensionMismatch(f"noise shapes must have order {n}, got {m.shape[0]}")
            cholesky(m)
        if len(sensors) < 1:
            raise DimensionMismatch("at least one sensor is required")
        object.__setattr__(self, "transition", f)
        object.__setattr__(self, "process", q)
        object.__setattr__(self, "sensors", sensors)

    @property
    def dimension(self) -> int:
        return self.transition.shape[0]

    @staticmethod
    def constant_velocity(period: float = 1.0, sensors: Sequence[ArrayLike] | None = None) -> LinearDynamics:
        """1D position/velocity target with white acceleration bounded by the discretized noise shape"""
        t = period
        f = np.array([[1.0, t], [0.0, 1.0]])
        q = np.array([[t**3 / 3, t**2 / 2], [t**2 / 2, t]])
        if sensors is None:
            sensors = (np.diag([20.0, 20.0]), np.diag([18.0, 22.0]), np.diag([22.0, 18.0]))
        return LinearDynamics(f, q, tuple(np.asarray(r, dtype=np.float64) for r in sensors), period)

    def to_json(self):
        return {
            "transition": self.transition.tolist(),
            "process": self.process.tolist(),
            "sensors": [r.tolist() for r in self.sensors],
            "period": self.period,
        }


@dataclass(frozen=True, eq=False)
class FilterState:
    estimate: Ellipsoid
    step: int = 0

    @property
    def center(self) -> Vector:
        return self.estimate.center

    @property
    def shape(self) -> SymMatrix:
        return self.estimate.shape


def prediction_weights(propagated: SymMatrix, process: SymMatrix) -> tuple[float, float]:
    """tau1 = sqrt(tr FPF^T) / (sqrt(tr FPF^T) + sqrt(tr Q)), tau2 = 1 - tau1"""
    a = float(np.trace(propagated))
    b = float(np.trace(process))
    if a <= 0 or b <= 0:
        raise DegenerateTrace(f"traces must be positive, got {a:.3g} and {b:.3g}")
    tau1 = np.sqrt(a) / (np.sqrt(a) + np.sqrt(b))
    return tau1, 1.0 - tau1


def predict(state: FilterState, dyn: LinearDynamics) -> FilterState:
    """Bounds the Minkowski sum of F E and the process-noise ellipsoid"""
    f = dyn.transition
    propagated = sym(f @ state.shape @ f.T)
    tau1, tau2 = prediction_weights(propagated, dyn.process)
    shape = propagated / tau1 + dyn.process / tau2
    return FilterState(Ellipsoid(f @ state.center, shape), state.step + 1)


def measurement_ellipsoid(y: ArrayLike, r: ArrayLike) -> Ellipsoid:
    """States consistent with measurement y under noise bounded by shape r"""
    return Ellipsoid(as_vector(y), np.asarray(r, dtype=np.float64))


def update(
    predicted: FilterState,
    meas: Ellipsoid,
    method: MethodTag = "decoupled_sdp",
    criterion: SizeCriterion = "logdet",
    opts: MethodOptions = MethodOptions(),
) -> FilterState:
    """Outer ellipsoid of predicted and measurement sets.

    Falls back to the prediction when the sets do not meet or the method fails on them.
    """
    spec = IntersectionSpec((predicted.estimate, meas))
    try:
        result = run_method(method, spec, criterion, opts)
    except (Infeasible, OptimizerFailed, NotPositiveDefinite, SingularCombination) as e:
        log_warning(f"step {predicted.step}: {method} update skipped, {type(e).__name__}: {e}")
        return predicted
    return FilterState(result.ellipsoid, predicted.step)


def fusion_center(
    estimates: Sequence[Ellipsoid],
    method: MethodTag = "decoupled_sdp",
    criterion: SizeCriterion = "logdet",
    opts: MethodOptions = MethodOptions(),
) -> MethodResult:
    return run_method(method, IntersectionSpec(tuple(estimates)), criterion, opts)
