from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn

from package.bounding import parametric_fuse
from package.context import console, log_warning, run_context
from package.ellipsoid import SIZE_CRITERIA, Ellipsoid, IntersectionSpec, SizeCriterion, size_value
from package.errors import EllipsoidError, SamplingBudgetExceeded
from package.iter import IterContainer, IterController, make_executor
from package.methods import MethodOptions, run_method
from package.results import METHOD_TAGS, MethodResult, MethodTag
from package.sampling import mvee_of_points, sample_intersection
from package.scenarios import RandomInstance, instance_grid
from package.sdp import s_procedure_holds, sdp_relaxation_holds


@dataclass(frozen=True)
class VerifyOptions:
    instances: int = 50
    samples: int = 10_000
    equivalence_tol: float = 1e-4
    sproc_tol: float = 1e-6
    ordering_slack: float = 1e-8
    containment_tol: float = 1e-9
    mvee_slack: float = 1e-6
    monotonicity_tol: float = 1e-6
    collapse_tol: float = 1e-6
    delta_tol: float = 1e-9
    candidates: int = 100
    weight_draws: int = 10
    inject_fault: bool = False
    seed: int = 0


CHECKS = (
    "containment",
    "mvee_lower_bound",
    "full_vs_decoupled",
    "full_vs_s_procedure",
    "predicates_agree",
    "decoupled_vs_bounding_optimal",
    "decoupled_le_bounding_no_delta",
    "decoupled_le_ci",
    "delta_bounds",
    "lifted_decoupled_feasible",
    "monotonicity",
    "identity_collapse",
)


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: list[str] = field(default_factory=list)
    worst: float = 0.0

    @property
    def ok(self) -> bool:
        return len(self.failed) == 0

    def to_row(self):
        return [self.name, self.passed, len(self.failed), f"{self.worst:.3g}", ", ".join(self.failed)]


type Record = tuple[str, str, bool, float]


class _Recorder:
    def __init__(self, label: str):
        self.label = label
        self.records: list[Record] = []

    def check(self, name: str, ok: bool, value: float = 0.0, detail: str = ""):
        label = f"{self.label}{f' {detail}' if detail else ''}"
        self.records.append((name, label, bool(ok), float(value)))

    def guarded(self, name: str, func: Callable[[], None]):
        try:
            func()
        except EllipsoidError as e:
            log_warning(f"{name}: {type(e).__name__}: {e}")
            self.check(name, False, float("inf"), type(e).__name__)


def _faulty(result: MethodResult) -> MethodResult:
    """Shifted along the first axis and shrunk by 10%, so both the set and its size are off"""
    e = result.ellipsoid
    broken = Ellipsoid(e.center + np.eye(e.dimension)[0] * 0.5, 0.9 * e.shape)
    return replace(result, ellipsoid=broken)


def _candidate_predicates(
    spec: IntersectionSpec, reference: MethodResult, rng: np.random.Generator, count: int
) -> tuple[int, int]:
    """Agreement of the S-procedure and relaxation predicates on perturbations of a solution"""
    assert reference.weights is not None
    n = spec.dimension
    agree = 0
    for _ in range(count):
        a = rng.standard_normal((n, n)) * 0.3
        factor = np.eye(n) + a
        shape = rng.uniform(0.5, 2.0) * factor @ reference.ellipsoid.shape @ factor.T
        center = reference.ellipsoid.center + rng.standard_normal(n) * 0.3 * np.sqrt(np.diag(shape))
        try:
            candidate = Ellipsoid(center, shape)
        except EllipsoidError:
            continue
        tau = reference.weights.weights * rng.uniform(0.5, 1.5, size=len(spec))
        if s_procedure_holds(candidate, spec, tau) == sdp_relaxation_holds(candidate, spec, tau, tol=1e-7):
            agree += 1
        elif s_procedure_holds(candidate, spec, tau, tol=1e-6) == sdp_relaxation_holds(candidate, spec, tau, tol=1e-5):
            # both predicates sit on the boundary within round-off
            agree += 1
    return agree, count


def verify_instance(
    instance: RandomInstance, options: VerifyOptions, method_opts: MethodOptions = MethodOptions()
) -> list[Record]:
    spec = instance.spec
    rec = _Recorder(f"seed={instance.seed}")
    rng = np.random.default_rng([options.seed, instance.seed])
    results: dict[tuple[MethodTag, SizeCriterion], MethodResult] = {}

    def result(method: MethodTag, criterion: SizeCriterion) -> MethodResult:
        if (method, criterion) not in results:
            r = run_method(method, spec, criterion, method_opts)
            results[method, criterion] = _faulty(r) if options.inject_fault and method == "decoupled_sdp" else r
        return results[method, criterion]

    def objective(method: MethodTag, criterion: SizeCriterion) -> float:
        return result(method, criterion).objective

    try:
        points = sample_intersection(spec, options.samples, rng)
    except SamplingBudgetExceeded as e:
        log_warning(f"seed={instance.seed}: {e}")
        points = np.array(e.accepted).reshape(-1, spec.dimension)

    def containment():
        for method in METHOD_TAGS:
            d = result(method, "logdet").ellipsoid.distances(points)
            worst = float(d.max(initial=0.0)) - 1.0
            rec.check("containment", worst <= options.containment_tol, worst, method)

    def mvee_bound():
        if points.shape[0] < spec.dimension + 1:
            return
        bound = size_value(mvee_of_points(points), "logdet")
        for method in METHOD_TAGS:
            gap = bound - objective(method, "logdet")
            rec.check("mvee_lower_bound", gap <= options.mvee_slack, gap, method)

    def equivalences():
        for criterion in SIZE_CRITERIA:
            gap = abs(objective("full_sdp", criterion) - objective("decoupled_sdp", criterion))
            rec.check("full_vs_decoupled", gap <= options.equivalence_tol, gap, criterion)
            gap = abs(objective("full_sdp", criterion) - objective("s_procedure", criterion))
            rec.check("full_vs_s_procedure", gap <= options.sproc_tol, gap, criterion)
            gap = abs(objective("decoupled_sdp", criterion) - objective("bounding_optimal", criterion))
            rec.check("decoupled_vs_bounding_optimal", gap <= options.equivalence_tol, gap, criterion)

    def orderings():
        for criterion in SIZE_CRITERIA:
            excess = objective("decoupled_sdp", criterion) - objective("bounding_no_delta", criterion)
            rec.check("decoupled_le_bounding_no_delta", excess <= options.ordering_slack, excess, criterion)
            excess = objective("decoupled_sdp", criterion) - objective("covariance_intersection", criterion)
            rec.check("decoupled_le_ci", excess <= options.ordering_slack, excess, criterion)

    def predicates():
        agree, total = _candidate_predicates(spec, result("full_sdp", "logdet"), rng, options.candidates)
        rec.check("predicates_agree", agree == total, float(total - agree))

    def delta_bounds():
        weights = [rng.dirichlet(np.ones(len(spec))) for _ in range(options.weight_draws)]
        weights += [
            r.weights.weights for r in results.values() if r.weights is not None and r.method.startswith("bounding")
        ]
        for t in weights:
            delta = parametric_fuse(spec, t / t.sum()).delta
            ok = -options.delta_tol <= delta <= 1.0 + options.delta_tol
            rec.check("delta_bounds", ok, delta)

    def lifted():
        decoupled = result("decoupled_sdp", "logdet")
        assert decoupled.weights is not None
        ok = sdp_relaxation_holds(decoupled.ellipsoid, spec, decoupled.weights, tol=1e-6)
        rec.check("lifted_decoupled_feasible", ok)

    def monotonicity():
        extra = Ellipsoid(instance.interior_point, np.eye(spec.dimension) * rng.uniform(0.5, 4.0))
        larger = spec.appended(extra)
        for method in ("full_sdp", "decoupled_sdp"):
            growth = run_method(method, larger, "logdet", method_opts).objective - objective(method, "logdet")
            rec.check("monotonicity", growth <= options.monotonicity_tol, growth, method)

    def identity_collapse():
        e = spec[0]
        copies = IntersectionSpec((e, e, e))
        for method in METHOD_TAGS:
            if method == "inscribed_inflate":
                continue
            out = run_method(method, copies, "logdet", method_opts).ellipsoid
            err = max(float(np.abs(out.center - e.center).max()), float(np.abs(out.shape - e.shape).max()))
            tol = options.collapse_tol * (1.0 + float(np.abs(e.shape).max()))
            rec.check("identity_collapse", err <= tol, err, method)

    with run_context(f"seed={instance.seed}"):
        for name, func in (
            ("containment", containment),
            ("mvee_lower_bound", mvee_bound),
            ("full_vs_decoupled", equivalences),
            ("decoupled_le_bounding_no_delta", orderings),
            ("predicates_agree", predicates),
            ("delta_bounds", delta_bounds),
            ("lifted_decoupled_feasible", lifted),
            ("monotonicity", monotonicity),
            ("identity_collapse", identity_collapse),
        ):
            rec.guarded(name, func)
    return rec.records


def summarize(records: list[Record]) -> list[CheckResult]:
    summary = {name: CheckResult(name) for name in CHECKS}
    for name, label, ok, value in records:
        c = summary[name]
        if ok:
            c.passed += 1
        elif label not in c.failed:
            c.failed.append(label)
        if np.isfinite(value):
            c.worst = max(c.worst, value)
    return list(summary.values())


def run_checks(
    options: VerifyOptions = VerifyOptions(),
    workers: int = 1,
    show_progress: bool = True,
    method_opts: MethodOptions = MethodOptions(),
) -> list[CheckResult]:
    instances = instance_grid(options.instances)
    progress = Progress(
        SpinnerColumn(finished_text="[green]✓[/]"),
        TextColumn("{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
        disable=not show_progress,
    )
    task = progress.add_task("Checking instances", total=len(instances))

    def check(instance: RandomInstance) -> list[Record]:
        return verify_instance(instance, options, method_opts)

    batch = IterContainer(instances, make_executor(workers))
    with progress, IterController(batch.map(check, on_done=lambda _: progress.update(task, advance=1))) as runs:
        records = [r for instance_records in runs.list for r in instance_records]
    return summarize(records)
