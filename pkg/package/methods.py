from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from package.barrier import SolverOptions
from package.bounding import bounding_no_delta, bounding_optimal, covariance_intersection, recursive_bounding
from package.ellipsoid import IntersectionSpec, SizeCriterion
from package.results import METHOD_TAGS, MethodResult, MethodTag
from package.sdp import decoupled_sdp, full_sdp, inscribed_inflate, s_procedure
from package.simplex import SimplexOptions

CLI_NAMES: dict[str, MethodTag] = {
    "sdp": "full_sdp",
    "sproc": "s_procedure",
    "decoupled": "decoupled_sdp",
    "inscribed": "inscribed_inflate",
    "bounding": "bounding_no_delta",
    "bounding-opt": "bounding_optimal",
    "ci": "covariance_intersection",
    "recursive": "recursive_bounding",
}

# Row labels of the static comparison table, in the order the procedures are introduced
TABLE_ROWS: tuple[tuple[MethodTag, str], ...] = (
    ("full_sdp", "Algorithm1"),
    ("decoupled_sdp", "Algorithm2"),
    ("inscribed_inflate", "Algorithm3"),
    ("bounding_no_delta", "Algorithm4"),
    ("recursive_bounding", "Algorithm5"),
)


@dataclass(frozen=True)
class MethodOptions:
    solver: SolverOptions = field(default_factory=SolverOptions)
    simplex: SimplexOptions = field(default_factory=SimplexOptions)


type Method = Callable[[IntersectionSpec, SizeCriterion, MethodOptions], MethodResult]

REGISTRY: dict[MethodTag, Method] = {
    "full_sdp": lambda spec, criterion, opts: full_sdp(spec, criterion, opts.solver),
    "s_procedure": lambda spec, criterion, opts: s_procedure(spec, criterion, opts.solver),
    "decoupled_sdp": lambda spec, criterion, opts: decoupled_sdp(spec, criterion, opts.solver),
    "inscribed_inflate": lambda spec, criterion, opts: inscribed_inflate(spec, criterion, opts.solver),
    "bounding_no_delta": lambda spec, criterion, opts: bounding_no_delta(spec, criterion, opts.simplex),
    "bounding_optimal": lambda spec, criterion, opts: bounding_optimal(spec, criterion, opts.simplex),
    "covariance_intersection": lambda spec, criterion, opts: covariance_intersection(spec, criterion, opts.simplex),
    "recursive_bounding": lambda spec, criterion, opts: recursive_bounding(spec, criterion),
}


def resolve_methods(name: str) -> list[MethodTag]:
    """CLI method name, "all", or a tag, to the list of method tags"""
    if name == "all":
        return list(METHOD_TAGS)
    if name in CLI_NAMES:
        return [CLI_NAMES[name]]
    if name in REGISTRY:
        return [name]  # type: ignore[list-item]
    raise ValueError(f"Unknown method '{name}', expected one of {', '.join([*CLI_NAMES, 'all'])}")


def run_method(
    method: MethodTag,
    spec: IntersectionSpec,
    criterion: SizeCriterion = "logdet",
    opts: MethodOptions = MethodOptions(),
) -> MethodResult:
    return REGISTRY[method](spec, criterion, opts)
