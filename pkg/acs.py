# acs.py
"""
Command-line entry point:

    python acs.py gen --tasks 5 --ratio 0.1 --count 3 --seed 7
    python acs.py solve data/motivational.json --policy acs
    python acs.py verify outputs/motivational_acs.json data/motivational.json
    python acs.py simulate outputs/motivational_acs.json data/motivational.json --fixed acec
    python acs.py experiment plans/trend.json
"""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from modules import __version__
from modules.benchgen import GenSpec, generate_taskset
from modules.errors import (
    AcsError,
    GenerationError,
    InfeasibleScheduleError,
    ScheduleMismatchError,
    TaskSetFormatError,
)
from modules.experiment import POLICIES, every_cell_failed, load_plan, run_experiment, solve_policy
from modules.fps import build_fps
from modules.logs import configure_logging
from modules.optimizer import SolverOptions, verify_worst_case
from modules.reports import aggregate_frame, plot_frames, schedule_frame, trace_frame, write_csv
from modules.residuals import constraint_residuals
from modules.schedule_store import check_schedule_matches, load_schedule, save_schedule
from modules.settings import get_settings
from modules.simulator import FIXED_WORKLOADS, run_monte_carlo
from modules.taskset_store import load_taskset, save_taskset, taskset_hash

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_MISMATCH = 4


def _fail(message: str, code: int, details=()) -> None:
    click.echo(f"error: {message}", err=True)
    for line in details:
        click.echo(f"  {line}", err=True)
    raise click.exceptions.Exit(code)


def _output_dir(ctx: click.Context, out: Optional[str]) -> Path:
    path = Path(out) if out else ctx.obj["output_dir"]
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(path: str):
    try:
        return load_taskset(path)
    except TaskSetFormatError as exc:
        _fail(f"{path}: {exc}", EXIT_USAGE)


def _with_voltage_range(ts, vmin: Optional[float], vmax: Optional[float]):
    if vmin is None and vmax is None:
        return ts
    model = replace(
        ts.power_model,
        vmin=ts.power_model.vmin if vmin is None else vmin,
        vmax=ts.power_model.vmax if vmax is None else vmax,
    )
    return replace(ts, power_model=model)


@click.group()
@click.version_option(__version__, prog_name="acs")
@click.option("--log-level", default=None, help="Override ACS_LOG_LEVEL.")
@click.option("--log-format", type=click.Choice(["json", "text"]), default=None)
@click.option("--output-dir", default=None, help="Override ACS_OUTPUT_DIR.")
@click.option("--quiet", is_flag=True, help="No progress bars.")
@click.pass_context
def cli(ctx, log_level, log_format, output_dir, quiet):
    """Average-case-aware static DVS schedules for rate-monotonic task sets."""
    settings = get_settings()
    configure_logging(log_level, log_format)
    ctx.ensure_object(dict)
    ctx.obj["output_dir"] = Path(output_dir) if output_dir else settings.output_dir
    ctx.obj["progress"] = not quiet and sys.stderr.isatty()


# ============================================================
# gen
# ============================================================
@cli.command()
@click.option("--tasks", "n_tasks", type=click.IntRange(min=1), required=True)
@click.option("--ratio", type=click.FloatRange(0.0, 1.0, min_open=True), required=True,
              help="BCEC/WCEC ratio.")
@click.option("--count", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--utilization", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None)
@click.option("--out", default=None, help="Directory for the task-set files.")
@click.pass_context
def gen(ctx, n_tasks, ratio, count, seed, utilization, out):
    """Generate random task sets plus a manifest."""
    out_dir = _output_dir(ctx, out)
    files = []
    for stream in range(count):
        params = GenSpec.from_settings(n_tasks, ratio, seed=seed, stream=stream, utilization=utilization)
        try:
            ts = generate_taskset(params)
        except GenerationError as exc:
            _fail(str(exc), EXIT_FAILURE)
        path = save_taskset(ts, out_dir / f"{ts.name}.json", seed=seed, extra_meta={"stream": stream})
        files.append({"file": path.name, "input_hash": taskset_hash(ts), "stream": stream})
        click.echo(str(path))

    manifest = {
        "tool_version": __version__,
        "seed": seed,
        "generator": {k: v for k, v in params.to_dict().items() if k != "stream"},
        "files": files,
    }
    manifest_path = out_dir / f"manifest_n{n_tasks}_r{ratio:g}_s{seed}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    click.echo(str(manifest_path))


# ============================================================
# solve
# ============================================================
@cli.command()
@click.argument("taskset_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", type=click.Choice(POLICIES), default="acs", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--starts", type=click.IntRange(min=1), default=None)
@click.option("--jobs", "n_jobs", type=int, default=None)
@click.option("--vmin", type=float, default=None, help="Override the file's vmin.")
@click.option("--vmax", type=float, default=None, help="Override the file's vmax.")
@click.option("--out", default=None, help="Schedule file to write.")
@click.option("--csv", "csv_path", default=None, help="Also write the schedule as CSV.")
@click.pass_context
def solve(ctx, taskset_file, policy, seed, starts, n_jobs, vmin, vmax, out, csv_path):
    """Solve a static schedule and check it against the all-WCEC run."""
    ts = _load(taskset_file)
    try:
        ts = _with_voltage_range(ts, vmin, vmax)
    except AcsError as exc:
        _fail(str(exc), EXIT_USAGE)

    options = SolverOptions.from_settings(seed=seed, starts=starts, n_jobs=n_jobs)
    try:
        fps = build_fps(ts, get_settings().generation["max_sub_instances"])
        schedule, report = solve_policy(ts, fps, policy, options)
    except InfeasibleScheduleError as exc:
        _fail(str(exc), EXIT_INFEASIBLE, exc.witness)
    except AcsError as exc:
        _fail(str(exc), EXIT_FAILURE)

    path = Path(out) if out else _output_dir(ctx, None) / f"{ts.name}_{policy}.json"
    save_schedule(schedule, path)
    logger.info("schedule written", extra={"path": str(path), "policy": policy, "objective": schedule.objective})
    if csv_path:
        write_csv(schedule_frame(schedule), csv_path, seed=schedule.seed, input_hash=schedule.taskset_hash)

    click.echo(f"schedule: {path}")
    click.echo(f"objective (average-case energy): {schedule.objective:.6g}")
    click.echo(f"worst-case energy: {report.energy:.6g}")
    click.echo(f"residual_max: {schedule.residual_max:.3g}  status: {schedule.status}")
    if not schedule.rounded_feasible:
        click.echo("note: integer-rounded budgets do not pass the worst-case check", err=True)


# ============================================================
# verify
# ============================================================
@cli.command()
@click.argument("schedule_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("taskset_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--vmax", type=float, default=None, help="Check against a different vmax.")
def verify(schedule_file, taskset_file, vmax):
    """All-WCEC check and constraint residuals of a schedule file."""
    ts = _load(taskset_file)
    try:
        schedule = load_schedule(schedule_file)
    except TaskSetFormatError as exc:
        _fail(f"{schedule_file}: {exc}", EXIT_USAGE)
    fps = build_fps(ts, get_settings().generation["max_sub_instances"])
    try:
        check_schedule_matches(schedule, fps, taskset_hash(ts))
    except ScheduleMismatchError as exc:
        _fail(str(exc), EXIT_MISMATCH)

    try:
        ts = _with_voltage_range(ts, None, vmax)
    except AcsError as exc:
        _fail(str(exc), EXIT_USAGE)
    report = verify_worst_case(schedule, fps, ts, ts.power_model)
    acec = {t.index: (t.wcec if schedule.policy == "wcs" else t.acec) for t in ts.tasks}
    residuals = constraint_residuals(schedule.entries, fps, ts, ts.power_model, acec=acec)

    click.echo(f"worst-case energy: {report.energy:.6g}")
    click.echo(f"residual_max: {residuals.max_residual:.3g}")
    for family, value in residuals.by_family.items():
        if value > 1e-6:
            click.echo(f"  {family}: {value:.3g} at {residuals.worst[family]}")
    if not report.feasible:
        _fail("schedule is not feasible in the worst case", EXIT_INFEASIBLE, report.violations)
    click.echo("feasible")


# ============================================================
# simulate
# ============================================================
@cli.command()
@click.argument("schedule_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("taskset_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--fixed", type=click.Choice(FIXED_WORKLOADS), default=None,
              help="Run every instance at this cycle count instead of sampling.")
@click.option("--jobs", "n_jobs", type=int, default=1, show_default=True)
@click.option("--trace", "trace_path", default=None, help="Per-segment trace CSV.")
@click.option("--out", default=None, help="Aggregate CSV to write.")
@click.pass_context
def simulate(ctx, schedule_file, taskset_file, trials, seed, fixed, n_jobs, trace_path, out):
    """Monte Carlo runtime simulation with greedy slack reclamation."""
    sim = get_settings().simulation
    trials = trials or (1 if fixed else int(sim["trials"]))
    seed = int(sim["seed"]) if seed is None else seed

    ts = _load(taskset_file)
    try:
        schedule = load_schedule(schedule_file)
    except TaskSetFormatError as exc:
        _fail(f"{schedule_file}: {exc}", EXIT_USAGE)
    fps = build_fps(ts, get_settings().generation["max_sub_instances"])
    digest = taskset_hash(ts)
    try:
        check_schedule_matches(schedule, fps, digest)
    except ScheduleMismatchError as exc:
        _fail(str(exc), EXIT_MISMATCH)

    traces = [] if trace_path else None
    result = run_monte_carlo(
        schedule, fps, ts, ts.power_model, trials, seed=seed, n_jobs=n_jobs, fixed=fixed, traces=traces
    )

    path = Path(out) if out else _output_dir(ctx, None) / f"{ts.name}_{schedule.policy}_sim.csv"
    write_csv(aggregate_frame([result]), path, seed=seed, input_hash=digest)
    if trace_path:
        write_csv(trace_frame(traces), trace_path, seed=seed, input_hash=digest)

    click.echo(f"aggregate: {path}")
    click.echo(
        f"mean energy {result.mean_energy:.6g} (std {result.std_energy:.3g}) over {trials} trials, "
        f"misses {result.misses}"
    )


# ============================================================
# experiment
# ============================================================
@cli.command()
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--strict", is_flag=True, help="Any deadline miss fails the run.")
@click.option("--out", default=None, help="Directory for the report files.")
@click.pass_context
def experiment(ctx, plan_file, strict, out):
    """ACS-vs-WCS energy sweep over generated task sets."""
    try:
        plan = load_plan(plan_file)
    except TaskSetFormatError as exc:
        _fail(f"{plan_file}: {exc}", EXIT_USAGE)

    out_dir = _output_dir(ctx, out or plan.output_dir)
    options = SolverOptions.from_settings(seed=plan.seed)
    set_df, cells = run_experiment(plan, options, progress=ctx.obj["progress"])

    digest = plan.digest()
    write_csv(set_df, out_dir / "experiment_sets.csv", seed=plan.seed, input_hash=digest)
    report_path = write_csv(cells, out_dir / "experiment_report.csv", seed=plan.seed, input_hash=digest)
    for n, frame in plot_frames(cells).items():
        write_csv(frame, out_dir / f"improvement_n{n}.csv", seed=plan.seed, input_hash=digest)

    click.echo(f"report: {report_path}")
    click.echo(cells.to_string(index=False))

    if every_cell_failed(cells):
        _fail("every cell failed", EXIT_FAILURE)
    misses = int(cells["misses"].sum())
    if strict and misses:
        _fail(f"{misses} deadline misses", EXIT_FAILURE)


if __name__ == "__main__":
    cli()
