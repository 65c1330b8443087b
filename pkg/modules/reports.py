# modules/reports.py
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from modules import __version__
from modules.optimizer import StaticSchedule
from modules.simulator import MonteCarloResult, Trace

CELL_COLUMNS = [
    "n_tasks", "ratio", "sets", "trials",
    "acs_mean", "wcs_mean", "improvement_pct", "misses", "failures",
]


# -----------------------------
# Schedules / traces
# -----------------------------
def schedule_frame(schedule: StaticSchedule) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "order": e.order, "i": e.i, "j": e.j, "k": e.k,
                "ts": e.ts, "te": e.te,
                "w_hat": e.w_hat, "w_hat_int": e.w_hat_int, "w_bar": e.w_bar,
                "v_bar": e.v_bar, "v_hat": e.v_hat,
            }
            for e in schedule.entries
        ]
    )


def trace_frame(traces: Iterable[Tuple[int, Trace]]) -> pd.DataFrame:
    rows = [
        {
            "trial": trial, "i": s.i, "j": s.j, "k": s.k,
            "start": s.start, "voltage": s.voltage, "cycles": s.cycles,
            "duration": s.duration, "energy": s.energy,
        }
        for trial, trace in traces
        for s in trace.segments
    ]
    cols = ["trial", "i", "j", "k", "start", "voltage", "cycles", "duration", "energy"]
    return pd.DataFrame(rows, columns=cols)


def aggregate_frame(results: Sequence[MonteCarloResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "policy": r.policy,
                "trials": r.trials,
                "mean_energy": r.mean_energy,
                "std_energy": r.std_energy,
                "min_energy": r.min_energy,
                "max_energy": r.max_energy,
                "misses": r.misses,
                "risk_events": r.risk_events,
                "seed": r.seed,
            }
            for r in results
        ]
    )


# -----------------------------
# Experiment sweeps
# -----------------------------
def cell_summary(set_df: pd.DataFrame, trials: int) -> pd.DataFrame:
    """
    set_df: one row per generated set with n_tasks, ratio, acs_energy,
    wcs_energy, misses, failed. Means only cover sets where both solves worked.
    """
    if set_df.empty:
        return pd.DataFrame(columns=CELL_COLUMNS)

    ok = set_df[~set_df["failed"]]
    counts = (
        set_df
        .groupby(["n_tasks", "ratio"], as_index=False)
        .agg(
            sets=("failed", "size"),
            misses=("misses", "sum"),
            failures=("failed", "sum"),
        )
    )
    means = (
        ok
        .groupby(["n_tasks", "ratio"], as_index=False)
        .agg(acs_mean=("acs_energy", "mean"), wcs_mean=("wcs_energy", "mean"))
    )
    out = counts.merge(means, on=["n_tasks", "ratio"], how="left")
    out["trials"] = trials
    out["improvement_pct"] = (out["wcs_mean"] - out["acs_mean"]) / out["wcs_mean"] * 100
    out["misses"] = out["misses"].astype(int)
    out["failures"] = out["failures"].astype(int)
    return out[CELL_COLUMNS].sort_values(["n_tasks", "ratio"]).reset_index(drop=True)


def plot_frames(cells: pd.DataFrame) -> Dict[int, pd.DataFrame]:
    """Improvement against BCEC/WCEC ratio, one frame per task count."""
    return {
        int(n): grp[["ratio", "improvement_pct"]].sort_values("ratio").reset_index(drop=True)
        for n, grp in cells.groupby("n_tasks")
    }


# -----------------------------
# Output
# -----------------------------
def with_provenance(df: pd.DataFrame, seed: Optional[int], input_hash: str) -> pd.DataFrame:
    out = df.copy()
    out["tool_version"] = __version__
    out["seed"] = seed
    out["input_hash"] = input_hash
    return out


def write_csv(df: pd.DataFrame, path: str | Path, seed: Optional[int] = None, input_hash: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if "seed" in df.columns:
        df = df.drop(columns=["seed"])
    with_provenance(df, seed, input_hash).to_csv(path, index=False, float_format="%.10g")
    return path
