# modules/experiment.py
"""
Solve-and-verify pipeline plus ACS-vs-WCS experiment sweeps over generated
task sets with paired Monte Carlo trials.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from tqdm import tqdm

from modules.benchgen import GenSpec, generate_taskset
from modules.errors import AcsError, InfeasibleScheduleError, TaskSetFormatError
from modules.fps import FPSchedule, build_fps
from modules.optimizer import (
    SolverOptions,
    StaticSchedule,
    WorstCaseReport,
    build_nlp,
    solve_acs,
    solve_wcs,
    verify_worst_case,
)
from modules.reports import cell_summary
from modules.simulator import fixed_cycles, run_monte_carlo, run_trial
from modules.taskmodel import TaskSet
from modules.taskset_store import taskset_hash

logger = logging.getLogger(__name__)

POLICIES = ("acs", "wcs")


# ============================================================
# Solve + verify
# ============================================================
def solve_policy(
    ts: TaskSet,
    fps: FPSchedule,
    policy: str,
    options: SolverOptions,
    wcs: Optional[StaticSchedule] = None,
) -> Tuple[StaticSchedule, WorstCaseReport]:
    """
    ACS is warm-started from the WCS optimum. A schedule that fails the
    all-WCEC check is never returned.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy '{policy}'")
    model = ts.power_model

    if wcs is None:
        wcs = solve_wcs(fps, ts, model, options)
    if policy == "wcs":
        schedule = wcs
    else:
        schedule = solve_acs(build_nlp(fps, ts, model), options, warm_starts=[(wcs.te, wcs.w_hat)])

    schedule = replace(schedule, taskset_hash=taskset_hash(ts))
    report = verify_worst_case(schedule, fps, ts, model)
    if not report.feasible:
        raise InfeasibleScheduleError(
            f"{policy} schedule fails the worst-case check", list(report.violations)
        )
    return schedule, report


# ============================================================
# Plan
# ============================================================
class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CellDoc(_Strict):
    n_tasks: int = Field(ge=1)
    ratio: float = Field(gt=0, le=1)


class ExperimentPlan(_Strict):
    cells: List[CellDoc] = Field(min_length=1)
    sets: int = Field(100, ge=1)
    trials: int = Field(1000, ge=1)
    seed: int = 0
    utilization: Optional[float] = Field(None, gt=0, lt=1)
    n_jobs: int = 1
    output_dir: Optional[str] = None

    def digest(self) -> str:
        canonical = json.dumps(self.model_dump(exclude={"output_dir", "n_jobs"}), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_plan(path: str | Path) -> ExperimentPlan:
    try:
        return ExperimentPlan.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in first["loc"]).lstrip(".")
        raise TaskSetFormatError(first["msg"], loc) from exc


# ============================================================
# One task set
# ============================================================
@dataclass(frozen=True)
class SetOutcome:
    n_tasks: int
    ratio: float
    set_index: int
    acs_energy: float = float("nan")
    wcs_energy: float = float("nan")
    misses: int = 0
    failed: bool = False
    reason: str = ""


def set_stream(n_tasks: int, ratio: float, set_index: int) -> int:
    return (n_tasks * 1000 + int(round(ratio * 1000))) * 100_000 + set_index


def run_set(
    plan: ExperimentPlan, cell: CellDoc, set_index: int, options: SolverOptions
) -> SetOutcome:
    gen = GenSpec.from_settings(
        cell.n_tasks,
        cell.ratio,
        seed=plan.seed,
        stream=set_stream(cell.n_tasks, cell.ratio, set_index),
        utilization=plan.utilization,
    )
    base = SetOutcome(cell.n_tasks, cell.ratio, set_index)
    try:
        ts = generate_taskset(gen)
        fps = build_fps(ts, gen.max_sub_instances)
        wcs, _ = solve_policy(ts, fps, "wcs", options)
        acs, _ = solve_policy(ts, fps, "acs", options, wcs=wcs)
    except AcsError as exc:
        logger.warning(
            "task set skipped",
            extra={"n_tasks": cell.n_tasks, "ratio": cell.ratio, "set": set_index, "reason": str(exc)},
        )
        return replace(base, failed=True, reason=str(exc))

    model = ts.power_model
    # same seed for both policies: every trial replays identical cycles
    acs_mc = run_monte_carlo(acs, fps, ts, model, plan.trials, seed=plan.seed)
    wcs_mc = run_monte_carlo(wcs, fps, ts, model, plan.trials, seed=plan.seed)

    misses = acs_mc.misses + wcs_mc.misses
    worst = fixed_cycles(ts, "wcec")
    for schedule in (acs, wcs):
        misses += run_trial(schedule, fps, ts, model, worst).misses

    return replace(base, acs_energy=acs_mc.mean_energy, wcs_energy=wcs_mc.mean_energy, misses=misses)


def run_experiment(
    plan: ExperimentPlan,
    options: SolverOptions,
    progress: bool = True,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Returns (per-set frame, per-cell report)."""
    jobs = [(cell, s) for cell in plan.cells for s in range(plan.sets)]
    it = tqdm(jobs, desc="task sets", unit="set", disable=not progress)

    outcomes = Parallel(n_jobs=plan.n_jobs)(
        delayed(run_set)(plan, cell, s, options) for cell, s in it
    )

    set_df = pd.DataFrame([asdict(o) for o in outcomes])
    cells = cell_summary(set_df, plan.trials)
    logger.info(
        "experiment finished",
        extra={
            "cells": len(plan.cells),
            "sets": len(jobs),
            "failures": int(set_df["failed"].sum()),
            "misses": int(set_df["misses"].sum()),
        },
    )
    return set_df, cells


def every_cell_failed(cells: pd.DataFrame) -> bool:
    return bool(len(cells)) and bool((cells["failures"] == cells["sets"]).all())
