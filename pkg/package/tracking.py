from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, cast

import numpy as np
from numpy.typing import NDArray
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn

from package.context import console, run_context
from package.ellipsoid import SIZE_CRITERIA, Ellipsoid, SizeCriterion, Vector, as_vector, contains, size_value
from package.errors import SpecParseError
from package.filter import FilterState, LinearDynamics, fusion_center, measurement_ellipsoid, predict, update
from package.iter import IterContainer, IterController, make_executor
from package.json import ScenarioJson
from package.methods import MethodOptions, resolve_methods
from package.results import MethodTag
from package.sampling import sample_in_ellipsoid

CONTAINMENT_TOL = 1e-9
ORDERING_SLACK = 1e-8


@dataclass(frozen=True)
class TrackScenario:
    dynamics: LinearDynamics = field(default_factory=LinearDynamics.constant_velocity)
    steps: int = 50
    runs: int = 100
    seed: int = 0
    criterion: SizeCriterion = "logdet"
    update_method: MethodTag = "decoupled_sdp"
    fusion_method: MethodTag = "decoupled_sdp"
    baseline_method: MethodTag = "bounding_no_delta"
    initial_truth: tuple[float, ...] = (1.0, 1.0)
    initial_center: tuple[float, ...] = (2.0, 2.0)
    initial_shape: tuple[tuple[float, ...], ...] = ((50.0, 0.0), (0.0, 50.0))

    def __post_init__(self):
        if self.steps < 1 or self.runs < 1:
            raise ValueError("steps and runs must be at least 1")
        if self.criterion not in SIZE_CRITERIA:
            raise ValueError(f"Unknown size criterion '{self.criterion}'")
        n = self.dynamics.dimension
        if len(self.initial_truth) != n or len(self.initial_center) != n:
            raise ValueError(f"initial state must have dimension {n}")

    @property
    def initial_estimate(self) -> Ellipsoid:
        return Ellipsoid(np.array(self.initial_center), np.array(self.initial_shape))

    @property
    def sensor_names(self) -> list[str]:
        return [f"sensor{i + 1}" for i in range(len(self.dynamics.sensors))]

    @property
    def series(self) -> tuple[str, ...]:
        return (*self.sensor_names, "fused_dec", "fused_ci", "sensor1_bnd")

    @staticmethod
    def from_json(obj: ScenarioJson, **overrides: Any) -> TrackScenario:
        """Scenario file values on top of the built-in constant-velocity case, then explicit overrides"""
        default = TrackScenario()
        d = default.dynamics
        try:
            dynamics = LinearDynamics(
                np.array(obj.get("transition", d.transition)),
                np.array(obj.get("process", d.process)),
                tuple(np.array(r) for r in obj.get("sensors", d.sensors)),
                float(obj.get("period", d.period)),
            )
            methods = {
                key: resolve_methods(cast(str, obj[key]))[0]
                for key in ("update_method", "fusion_method", "baseline_method")
                if key in obj
            }
            values: dict[str, Any] = {
                "dynamics": dynamics,
                "steps": int(obj.get("steps", default.steps)),
                "runs": int(obj.get("runs", default.runs)),
                "seed": int(obj.get("seed", default.seed)),
                "criterion": obj.get("criterion", default.criterion),
                "initial_truth": tuple(map(float, obj.get("initial_truth", default.initial_truth))),
                "initial_center": tuple(map(float, obj.get("initial_center", default.initial_center))),
                "initial_shape": tuple(
                    tuple(map(float, row)) for row in obj.get("initial_shape", default.initial_shape)
                ),
                **methods,
            }
            values.update({k: v for k, v in overrides.items() if v is not None})
            return TrackScenario(**values)
        except SpecParseError:
            raise
        except Exception as e:
            raise SpecParseError(f"invalid scenario: {e}") from e

    def to_json(self):
        return {
            **self.dynamics.to_json(),
            "steps": self.steps,
            "runs": self.runs,
            "seed": self.seed,
            "criterion": self.criterion,
            "update_method": self.update_method,
            "fusion_method": self.fusion_method,
            "baseline_method": self.baseline_method,
            "initial_truth": list(self.initial_truth),
            "initial_center": list(self.initial_center),
            "initial_shape": [list(row) for row in self.initial_shape],
        }


@dataclass
class RunTrace:
    squared_errors: NDArray[np.float64]
    volumes: NDArray[np.float64]
    containment_failures: list[tuple[int, str]] = field(default_factory=list)
    ordering_failures: list[tuple[int, str]] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class TrackMetrics:
    series: tuple[str, ...]
    rmse: NDArray[np.float64]
    volume: NDArray[np.float64]
    contained: NDArray[np.bool_]
    containment_failures: list[tuple[int, int, str]]
    ordering_failures: list[tuple[int, int, str]]

    @property
    def steps(self) -> int:
        return self.rmse.shape[0]

    def column(self, kind: str, name: str) -> NDArray[np.float64]:
        table = self.rmse if kind == "rmse" else self.volume
        return table[:, self.series.index(name)]

    @property
    def columns(self) -> list[str]:
        head = self.series[:-1]
        tail = self.series[-1]
        return ["step", *(f"rmse_{s}" for s in head), *(f"vol_{s}" for s in head), f"rmse_{tail}", f"vol_{tail}"]

    def rows(self) -> list[list[float]]:
        k = len(self.series) - 1
        return [
            [step + 1, *self.rmse[step, :k], *self.volume[step, :k], self.rmse[step, k], self.volume[step, k]]
            for step in range(self.steps)
        ]


def _noise(shape: NDArray[np.float64]) -> Ellipsoid:
    return Ellipsoid(np.zeros(shape.shape[0]), shape)


def simulate_run(
    scenario: TrackScenario, seed: np.random.SeedSequence, opts: MethodOptions = MethodOptions()
) -> RunTrace:
    """One Monte Carlo run: truth, per-sensor filters, sensor-1 baseline filter and both fusion centers"""
    rng = np.random.default_rng(seed)
    dyn = scenario.dynamics
    criterion = scenario.criterion
    process = _noise(dyn.process)
    sensor_noise = [_noise(r) for r in dyn.sensors]
    names = scenario.sensor_names

    truth: Vector = as_vector(scenario.initial_truth)
    states = [FilterState(scenario.initial_estimate) for _ in dyn.sensors]
    baseline = FilterState(scenario.initial_estimate)

    size = (scenario.steps, len(scenario.series))
    trace = RunTrace(np.zeros(size), np.zeros(size))
    for k in range(scenario.steps):
        step = k + 1
        truth = dyn.transition @ truth + sample_in_ellipsoid(process, rng)
        measurements = [measurement_ellipsoid(truth + sample_in_ellipsoid(v, rng), v.shape) for v in sensor_noise]

        updated: list[FilterState] = []
        for i, (state, meas) in enumerate(zip(states, measurements)):
            predicted = predict(state, dyn)
            if not contains(predicted.estimate, truth, CONTAINMENT_TOL):
                trace.containment_failures.append((step, f"predicted_{names[i]}"))
            upd = update(predicted, meas, scenario.update_method, criterion, opts)
            if i == 0:
                shadow = update(predicted, meas, scenario.baseline_method, criterion, opts)
                if size_value(upd.estimate, criterion) > size_value(shadow.estimate, criterion) + ORDERING_SLACK:
                    trace.ordering_failures.append((step, "update"))
            updated.append(upd)

        baseline = update(predict(baseline, dyn), measurements[0], scenario.baseline_method, criterion, opts)
        locals_ = [u.estimate for u in updated]
        fused = fusion_center(locals_, scenario.fusion_method, criterion, opts).ellipsoid
        fused_ci = fusion_center(locals_, "covariance_intersection", criterion, opts).ellipsoid
        if size_value(fused, criterion) > size_value(fused_ci, criterion) + ORDERING_SLACK:
            trace.ordering_failures.append((step, "fusion"))

        for j, (name, e) in enumerate(zip(scenario.series, [*locals_, fused, fused_ci, baseline.estimate])):
            error = e.center - truth
            trace.squared_errors[k, j] = float(error @ error)
            trace.volumes[k, j] = size_value(e, "logdet")
            if not contains(e, truth, CONTAINMENT_TOL):
                trace.containment_failures.append((step, name))
        states = updated
    return trace


def simulate(
    scenario: TrackScenario, workers: int = 1, show_progress: bool = True, opts: MethodOptions = MethodOptions()
) -> TrackMetrics:
    """Monte Carlo runs with generators spawned from the scenario seed; results do not depend on `workers`"""
    seeds = np.random.SeedSequence(scenario.seed).spawn(scenario.runs)
    progress = Progress(
        SpinnerColumn(finished_text="[green]✓[/]"),
        TextColumn("{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
        disable=not show_progress,
    )
    task = progress.add_task("Tracking runs", total=scenario.runs)

    def run(index: int) -> RunTrace:
        with run_context(f"run {index}"):
            return simulate_run(scenario, seeds[index], opts)

    batch = IterContainer(range(scenario.runs), make_executor(workers))
    with progress, IterController(batch.map(run, on_done=lambda _: progress.update(task, advance=1))) as runs:
        traces = runs.list

    squared = np.stack([t.squared_errors for t in traces])
    volumes = np.stack([t.volumes for t in traces])
    contained = np.ones(squared.shape[1:], dtype=bool)
    containment_failures = []
    for r, t in enumerate(traces):
        for step, name in t.containment_failures:
            containment_failures.append((r, step, name))
            if name in scenario.series:
                contained[step - 1, scenario.series.index(name)] = False
    ordering_failures = [(r, step, which) for r, t in enumerate(traces) for step, which in t.ordering_failures]
    return TrackMetrics(
        scenario.series,
        np.sqrt(squared.mean(axis=0)),
        volumes.mean(axis=0),
        contained,
        containment_failures,
        ordering_failures,
    )


def write_metrics_csv(path: Path, metrics: TrackMetrics):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(metrics.columns)
        for row in metrics.rows():
            writer.writerow([str(int(row[0])), *(f"{v:.15g}" for v in row[1:])])
