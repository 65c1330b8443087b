import json
import math
from dataclasses import replace

import pandas as pd
import pytest

from modules.errors import InfeasibleScheduleError, TaskSetFormatError
from modules.experiment import (
    CellDoc,
    ExperimentPlan,
    every_cell_failed,
    load_plan,
    run_experiment,
    run_set,
    set_stream,
    solve_policy,
)
from modules.fps import build_fps
from modules.optimizer import SolverOptions
from modules.power import PowerModel, PowerVariant
from modules.reports import CELL_COLUMNS, cell_summary, plot_frames, write_csv
from modules.taskset_store import taskset_hash


FAST = SolverOptions(starts=4, max_iter=200, seed=0)


# -----------------------------
# solve_policy
# -----------------------------
def test_solve_policy_stamps_hash(motivational, motivational_fps, options):
    acs, report = solve_policy(motivational, motivational_fps, "acs", options)
    assert acs.taskset_hash == taskset_hash(motivational)
    assert report.feasible
    assert acs.objective == pytest.approx(120.0, abs=1e-3)


def test_solve_policy_rejects_unknown(motivational, motivational_fps, options):
    with pytest.raises(ValueError):
        solve_policy(motivational, motivational_fps, "edf", options)


def test_solve_policy_infeasible(motivational, options):
    slow = PowerModel(PowerVariant.INVERSE_LAW, lam=1.0, vth=0.0, vmin=0.7, vmax=1.0)
    ts = replace(motivational, power_model=slow)
    with pytest.raises(InfeasibleScheduleError):
        solve_policy(ts, build_fps(ts), "wcs", options)


# -----------------------------
# Summaries
# -----------------------------
def _sets():
    return pd.DataFrame(
        [
            {"n_tasks": 3, "ratio": 0.1, "set_index": 0, "acs_energy": 80.0, "wcs_energy": 100.0, "misses": 0, "failed": False, "reason": ""},
            {"n_tasks": 3, "ratio": 0.1, "set_index": 1, "acs_energy": 60.0, "wcs_energy": 100.0, "misses": 0, "failed": False, "reason": ""},
            {"n_tasks": 3, "ratio": 0.1, "set_index": 2, "acs_energy": math.nan, "wcs_energy": math.nan, "misses": 0, "failed": True, "reason": "x"},
            {"n_tasks": 3, "ratio": 0.9, "set_index": 0, "acs_energy": 95.0, "wcs_energy": 100.0, "misses": 1, "failed": False, "reason": ""},
            {"n_tasks": 5, "ratio": 0.1, "set_index": 0, "acs_energy": math.nan, "wcs_energy": math.nan, "misses": 0, "failed": True, "reason": "y"},
        ]
    )


def test_cell_summary_skips_failed_sets():
    cells = cell_summary(_sets(), trials=10)
    assert list(cells.columns) == CELL_COLUMNS
    first = cells.iloc[0]
    assert (first["n_tasks"], first["ratio"], first["sets"], first["failures"]) == (3, 0.1, 3, 1)
    assert first["acs_mean"] == pytest.approx(70.0)
    assert first["improvement_pct"] == pytest.approx(30.0)
    assert cells.iloc[1]["misses"] == 1
    assert math.isnan(cells.iloc[2]["improvement_pct"])


def test_every_cell_failed():
    cells = cell_summary(_sets(), trials=10)
    assert not every_cell_failed(cells)
    assert every_cell_failed(cells[cells["n_tasks"] == 5])


def test_plot_frames_one_per_task_count():
    frames = plot_frames(cell_summary(_sets(), trials=10))
    assert sorted(frames) == [3, 5]
    assert frames[3]["ratio"].tolist() == [0.1, 0.9]


def test_write_csv_adds_provenance(tmp_path):
    path = write_csv(cell_summary(_sets(), trials=10), tmp_path / "r.csv", seed=4, input_hash="abc")
    df = pd.read_csv(path)
    assert set(df["seed"]) == {4}
    assert set(df["input_hash"]) == {"abc"}
    assert "tool_version" in df.columns


# -----------------------------
# Plans and sweeps
# -----------------------------
def test_set_streams_are_distinct():
    streams = {set_stream(n, r, s) for n in (3, 5, 10) for r in (0.1, 0.5, 0.9) for s in range(100)}
    assert len(streams) == 3 * 3 * 100


def test_load_plan_reports_field(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"cells": [{"n_tasks": 3, "ratio": 2.0}]}), encoding="utf-8")
    with pytest.raises(TaskSetFormatError) as info:
        load_plan(path)
    assert info.value.field_path == "cells[0].ratio"


def test_plan_digest_ignores_output_dir():
    a = ExperimentPlan(cells=[CellDoc(n_tasks=3, ratio=0.5)], output_dir="a")
    b = ExperimentPlan(cells=[CellDoc(n_tasks=3, ratio=0.5)], output_dir="b")
    assert a.digest() == b.digest()


def test_run_set_simulates_both_policies():
    plan = ExperimentPlan(cells=[CellDoc(n_tasks=3, ratio=0.1)], sets=1, trials=30, seed=1)
    outcome = run_set(plan, plan.cells[0], 0, FAST)
    assert not outcome.failed
    assert outcome.misses == 0
    assert math.isfinite(outcome.acs_energy) and math.isfinite(outcome.wcs_energy)
    assert outcome.acs_energy > 0


def test_run_experiment_small():
    plan = ExperimentPlan(
        cells=[CellDoc(n_tasks=3, ratio=0.1), CellDoc(n_tasks=3, ratio=0.9)],
        sets=2,
        trials=20,
        seed=5,
    )
    set_df, cells = run_experiment(plan, FAST, progress=False)
    assert len(set_df) == 4
    assert cells["sets"].tolist() == [2, 2]
    assert int(cells["misses"].sum()) == 0
