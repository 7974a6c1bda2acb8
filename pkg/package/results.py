from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike

from package.ellipsoid import Ellipsoid, SizeCriterion, Vector, as_vector, size_value

type Normalization = Literal["nonnegative", "simplex"]
type MethodTag = Literal[
    "full_sdp",
    "s_procedure",
    "decoupled_sdp",
    "inscribed_inflate",
    "bounding_no_delta",
    "bounding_optimal",
    "covariance_intersection",
    "recursive_bounding",
]

METHOD_TAGS: tuple[MethodTag, ...] = (
    "full_sdp",
    "s_procedure",
    "decoupled_sdp",
    "inscribed_inflate",
    "bounding_no_delta",
    "bounding_optimal",
    "covariance_intersection",
    "recursive_bounding",
)


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: Vector
    normalization: Normalization = "simplex"

    def __post_init__(self):
        w = as_vector(self.weights)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if self.normalization == "simplex" and abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"simplex weights must sum to 1, got {w.sum():.15g}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def simplex(weights: ArrayLike) -> WeightVector:
        """Clips round-off negatives and renormalizes before validating"""
        w = np.maximum(as_vector(weights), 0.0)
        return WeightVector(w / w.sum(), "simplex")

    @staticmethod
    def nonnegative(weights: ArrayLike) -> WeightVector:
        return WeightVector(np.maximum(as_vector(weights), 0.0), "nonnegative")

    def __len__(self):
        return self.weights.shape[0]

    def to_json(self):
        return self.weights.tolist()


@dataclass(frozen=True, eq=False)
class MethodResult:
    method: MethodTag
    ellipsoid: Ellipsoid
    criterion: SizeCriterion
    weights: WeightVector | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return size_value(self.ellipsoid, self.criterion)

    def to_json(self):
        return {
            "method": self.method,
            "ellipsoid": self.ellipsoid.to_json(),
            "objective": self.objective,
            "criterion": self.criterion,
            "weights": None if self.weights is None else self.weights.to_json(),
            "diagnostics": self.diagnostics,
        }
