from __future__ import annotations

from pathlib import Path
from typing import Any, NotRequired, TypedDict, cast

import rapidjson

from package.ellipsoid import Ellipsoid, IntersectionSpec
from package.errors import EllipsoidError, SpecParseError


class EllipsoidJson(TypedDict):
    center: list[float]
    shape: list[list[float]]


class SpecJson(TypedDict):
    ellipsoids: list[EllipsoidJson]


class ScenarioJson(TypedDict):
    transition: NotRequired[list[list[float]]]
    process: NotRequired[list[list[float]]]
    sensors: NotRequired[list[list[list[float]]]]
    period: NotRequired[float]
    steps: NotRequired[int]
    runs: NotRequired[int]
    seed: NotRequired[int]
    criterion: NotRequired[str]
    update_method: NotRequired[str]
    fusion_method: NotRequired[str]
    baseline_method: NotRequired[str]
    initial_truth: NotRequired[list[float]]
    initial_center: NotRequired[list[float]]
    initial_shape: NotRequired[list[list[float]]]


def parse_json(data: bytes | None) -> Any:
    if data is None or len(data) == 0:
        raise SpecParseError("empty JSON document")

    # RapidJSON only supports regular utf-8, remove BOM if it exists
    if data.startswith(b"\xef\xbb\xbf"):
        data = data[3:]

    try:
        # Allow trailing commas and comments in hand-written specs
        return rapidjson.loads(data, parse_mode=rapidjson.PM_COMMENTS | rapidjson.PM_TRAILING_COMMAS)
    except (rapidjson.JSONDecodeError, ValueError, UnicodeDecodeError) as e:
        raise SpecParseError(f"invalid JSON: {e}") from e


def read_json(path: Path) -> Any:
    try:
        data = path.read_bytes()
    except OSError as e:
        raise SpecParseError(f"cannot read {path}: {e}") from e
    return parse_json(data)


def spec_from_json(obj: Any) -> IntersectionSpec:
    """Accepts {"ellipsoids": [...]} or a bare list of {"center", "shape"} objects"""
    items = obj.get("ellipsoids") if isinstance(obj, dict) else obj
    if not isinstance(items, list) or len(items) == 0:
        raise SpecParseError('expected a non-empty list of ellipsoids under "ellipsoids"')
    members = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or "center" not in item or "shape" not in item:
            raise SpecParseError(f'ellipsoid {i} needs "center" and "shape"')
        e = cast(EllipsoidJson, item)
        try:
            members.append(Ellipsoid(e["center"], e["shape"]))
        except (EllipsoidError, ValueError, TypeError) as err:
            raise SpecParseError(f"ellipsoid {i}: {err}") from err
    try:
        return IntersectionSpec(tuple(members))
    except EllipsoidError as err:
        raise SpecParseError(str(err)) from err


def read_spec(path: Path) -> IntersectionSpec:
    return spec_from_json(read_json(path))


def read_scenario(path: Path) -> ScenarioJson:
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise SpecParseError("scenario must be a JSON object")
    return cast(ScenarioJson, obj)


def dumps(obj: Any) -> str:
    return rapidjson.dumps(obj, indent=2, number_mode=rapidjson.NM_NAN)


def write_json(path: Path, obj: Any):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(obj))
        f.write("\n")
