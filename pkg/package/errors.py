from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from numpy.typing import NDArray


class EllipsoidError(Exception):
    """Base class for every error raised by this package"""


class DimensionMismatch(EllipsoidError):
    pass


class NotPositiveDefinite(EllipsoidError):
    pass


class DegenerateInput(EllipsoidError):
    pass


class SingularCombination(EllipsoidError):
    pass


class DegenerateTrace(EllipsoidError):
    pass


class SamplingBudgetExceeded(EllipsoidError):
    def __init__(self, message: str, accepted: list[NDArray]):
        super().__init__(message)
        self.accepted = accepted


class Infeasible(EllipsoidError):
    pass


class EmptyIntersection(Infeasible):
    """Raised when a weight vector certifies that the intersection is empty (delta_t > 1)"""


class OptimizerFailed(EllipsoidError):
    pass


class SpecParseError(EllipsoidError):
    pass
