from __future__ import annotations

import argparse
import csv
import time
from pathlib import Path
from typing import Callable, cast

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from tabulate import tabulate

from package.checks import VerifyOptions, run_checks
from package.context import (
    console,
    error_console,
    make_warnings_ctx,
    print_warnings,
    reset_debug,
    reset_warnings_ctx,
    set_debug,
)
from package.ellipsoid import SIZE_CRITERIA, SizeCriterion
from package.errors import (
    DegenerateInput,
    DimensionMismatch,
    EllipsoidError,
    Infeasible,
    NotPositiveDefinite,
    SpecParseError,
)
from package.json import ScenarioJson, read_scenario, read_spec, write_json
from package.methods import CLI_NAMES, TABLE_ROWS, MethodOptions, resolve_methods, run_method
from package.plotting import plot_ellipsoids, plot_metric
from package.scenarios import STATIC_DRAWS, static_draws, static_spec
from package.tracking import TrackScenario, simulate, write_metrics_csv

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_OPTIMIZER = 4


class RunConfig:
    command: str
    input: Path | None = None
    out: Path = Path("out")
    seed: int | None = None
    method: str = "all"
    criterion: SizeCriterion | None = None
    runs: int | None = None
    steps: int | None = None
    tol: float | None = None
    instances: int = 50
    samples: int = 10_000
    workers: int = 1
    inject_fault: bool = False
    progress: bool = True
    debug: bool = False


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Output directory", type=Path, default="./out")
    common.add_argument("--seed", help="Seed for every random draw", type=_seed, default=None)
    common.add_argument(
        "--workers", help="Threads for Monte Carlo batches, results do not depend on it", type=_positive, default=1
    )
    common.add_argument("--progress", help="Show progress bars", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument(
        "--debug",
        help="Enable debug logging",
        action=argparse.BooleanOptionalAction,
        default=False,
    )

    methods = argparse.ArgumentParser(add_help=False)
    methods.add_argument("--method", help="Method to run", choices=[*CLI_NAMES, "all"], default="all")
    methods.add_argument("--criterion", help="Size criterion", choices=SIZE_CRITERIA, default=None)

    parser = argparse.ArgumentParser(description="Outer ellipsoids of ellipsoid intersections and fusion")
    commands = parser.add_subparsers(dest="command", required=True)

    fuse = commands.add_parser("fuse", help="Fuse the ellipsoids of a spec file", parents=[common, methods])
    fuse.add_argument("--input", help="Spec JSON", type=Path, required=True)

    static_demo = commands.add_parser("static-demo", help="Static three-sensor comparison table", parents=[common])
    static_demo.add_argument("--runs", help=f"Draws of xi, {STATIC_DRAWS} if omitted", type=_positive, default=None)

    track = commands.add_parser("track", help="Monte Carlo tracking simulation", parents=[common])
    track.add_argument("--input", help="Scenario JSON, built-in scenario if omitted", type=Path, default=None)
    track.add_argument("--runs", help="Monte Carlo runs", type=_positive, default=None)
    track.add_argument("--steps", help="Time steps per run", type=_positive, default=None)
    track.add_argument("--criterion", help="Size criterion", choices=SIZE_CRITERIA, default=None)
    track.add_argument(
        "--method", help="Method of the sensor updates and the fusion center", choices=list(CLI_NAMES), default=None
    )

    verify = commands.add_parser("verify", help="Invariant suite on the random instance grid", parents=[common])
    verify.add_argument("--instances", help="Grid size", type=_positive, default=50)
    verify.add_argument("--samples", help="Intersection samples per instance", type=_positive, default=10_000)
    verify.add_argument("--tol", help="Tolerance of the equivalence checks", type=float, default=None)
    verify.add_argument(
        "--inject-fault",
        help="Shift and shrink the decoupled result to check that the suite catches it",
        action=argparse.BooleanOptionalAction,
        default=False,
    )

    plot = commands.add_parser("plot", help="SVG of a spec and its outer ellipsoids", parents=[common, methods])
    plot.add_argument("--input", help="Spec JSON", type=Path, required=True)
    return parser


def _input(config: RunConfig) -> Path:
    if config.input is None:
        raise SpecParseError("--input is required")
    return config.input


def cmd_fuse(config: RunConfig) -> int:
    spec = read_spec(_input(config))
    criterion = config.criterion or "logdet"
    rows = []
    for method in resolve_methods(config.method):
        result = run_method(method, spec, criterion)
        write_json(config.out / f"result_{method}.json", result.to_json())
        rows.append([method, f"{result.objective:.6f}"])
    console.print(tabulate(rows, headers=["method", criterion], tablefmt="simple_grid", disable_numparse=True))
    console.print(f"[green]✓[/] Fused {len(spec)} ellipsoids, results in {config.out}")
    return EXIT_OK


def cmd_static_demo(config: RunConfig) -> int:
    seed = config.seed or 0
    draws = static_draws(seed, config.runs or STATIC_DRAWS)
    opts = MethodOptions()
    progress = Progress(
        SpinnerColumn(finished_text="[green]✓[/]"),
        TextColumn("{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
        disable=not config.progress,
    )
    table, timing = [], []
    with progress:
        for method, label in TABLE_ROWS:
            task = progress.add_task(label, total=len(draws))
            values = []
            start = time.perf_counter()
            for xi in draws:
                values.append(run_method(method, static_spec(float(xi)), "logdet", opts).objective)
                progress.update(task, advance=1)
            elapsed = time.perf_counter() - start
            table.append([method, label, float(np.mean(values))])
            timing.append([method, label, elapsed / len(draws)])

    config.out.mkdir(parents=True, exist_ok=True)
    for name, header, rows in (
        ("static_table.csv", ["method", "label", "mean_logdet"], table),
        ("static_timing.csv", ["method", "label", "seconds_per_draw"], timing),
    ):
        with open(config.out / name, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[m, label, f"{v:.15g}"] for m, label, v in rows])

    first = static_spec(float(draws[0]))
    plot_ellipsoids(
        first.ellipsoids,
        [run_method("decoupled_sdp", first, "logdet", opts)],
        config.out / "static_demo.svg",
        f"xi = {draws[0]:.4f}",
    )
    console.print(
        tabulate(
            [[label, method, f"{v:.4f}", f"{t:.4f}"] for (method, label, v), (_, _, t) in zip(table, timing)],
            headers=["", "method", "mean logdet", "s/draw"],
            tablefmt="simple_grid",
            disable_numparse=True,
        )
    )
    console.print(f"[green]✓[/] Static comparison over {len(draws)} draws, results in {config.out}")
    return EXIT_OK


def cmd_track(config: RunConfig) -> int:
    obj = read_scenario(config.input) if config.input is not None else cast(ScenarioJson, {})
    method = resolve_methods(config.method)[0] if config.method is not None else None
    scenario = TrackScenario.from_json(
        obj,
        runs=config.runs,
        steps=config.steps,
        seed=config.seed,
        criterion=config.criterion,
        update_method=method,
        fusion_method=method,
    )
    metrics = simulate(scenario, workers=config.workers, show_progress=config.progress)
    write_metrics_csv(config.out / "metrics.csv", metrics)
    plot_metric(metrics, "rmse", config.out / "rmse.svg")
    plot_metric(metrics, "volume", config.out / "volume.svg")

    if metrics.containment_failures:
        console.print(f":x-emoji:[red] Truth outside an estimate {len(metrics.containment_failures)} times. [/]")
    if metrics.ordering_failures:
        console.print(f":x-emoji:[red] Volume ordering violated {len(metrics.ordering_failures)} times. [/]")
    console.print(f"[green]✓[/] Tracking - {scenario.runs} runs, {scenario.steps} steps, results in {config.out}")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    default = VerifyOptions()
    options = VerifyOptions(
        instances=config.instances,
        samples=config.samples,
        equivalence_tol=default.equivalence_tol if config.tol is None else config.tol,
        inject_fault=config.inject_fault,
        seed=config.seed or 0,
    )
    results = run_checks(options, workers=config.workers, show_progress=config.progress)
    console.print(
        tabulate(
            [r.to_row() for r in results],
            headers=["check", "passed", "failed", "worst", "failing instances"],
            tablefmt="simple_grid",
            disable_numparse=True,
        )
    )
    failed = [r for r in results if not r.ok]
    if failed:
        console.print(f":x-emoji:[red] {len(failed)} of {len(results)} checks failed. [/]")
        return EXIT_CHECK_FAILED
    console.print(f"[green]✓[/] All {len(results)} checks passed on {options.instances} instances")
    return EXIT_OK


def cmd_plot(config: RunConfig) -> int:
    spec = read_spec(_input(config))
    criterion = config.criterion or "logdet"
    results = [run_method(method, spec, criterion) for method in resolve_methods(config.method)]
    path = config.out / "ellipsoids.svg"
    plot_ellipsoids(spec.ellipsoids, results, path)
    console.print(f"[green]✓[/] Plotted {len(spec)} ellipsoids and {len(results)} results to {path}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "fuse": cmd_fuse,
    "static-demo": cmd_static_demo,
    "track": cmd_track,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


def exit_code(error: Exception) -> int:
    match error:
        case np.linalg.LinAlgError():
            return EXIT_OPTIMIZER
        case OSError():
            return EXIT_INVALID
        case SpecParseError() | DimensionMismatch() | NotPositiveDefinite() | DegenerateInput() | ValueError():
            return EXIT_INVALID
        case Infeasible():
            return EXIT_INFEASIBLE
        case _:
            return EXIT_OPTIMIZER


def run(config: RunConfig) -> int:
    warnings_token = make_warnings_ctx()
    debug_token = set_debug(config.debug)
    try:
        return COMMANDS[config.command](config)
    except (EllipsoidError, ValueError, OSError) as e:
        if config.debug:
            error_console.print_exception()
        error_console.print(f":x-emoji:[red] {config.command}: {type(e).__name__}: {e} [/]")
        return exit_code(e)
    finally:
        print_warnings()
        reset_warnings_ctx(warnings_token)
        reset_debug(debug_token)


def main(argv: list[str] | None = None) -> int:
    config = build_parser().parse_args(argv, namespace=RunConfig())
    return run(cast(RunConfig, config))
