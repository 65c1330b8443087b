# modules/schedule_store.py
"""Static schedule files (JSON): a header plus one row per sub-instance."""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from modules import __version__
from modules.errors import ScheduleMismatchError, TaskSetFormatError
from modules.fps import FPSchedule
from modules.optimizer import ScheduleEntry, StaticSchedule


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EntryDoc(_Strict):
    i: int = Field(ge=1)
    j: int = Field(ge=1)
    k: int = Field(ge=1)
    order: int = Field(ge=0)
    te: float
    w_hat: float = Field(ge=0)
    w_hat_int: int = Field(ge=0)
    ts: float
    w_bar: float = Field(ge=0)
    v_bar: float
    v_hat: float


class ScheduleDoc(_Strict):
    tool_version: str
    policy: Literal["acs", "wcs", "manual"]
    seed: int
    taskset_hash: str
    objective: float
    status: str
    residual_max: float
    rounded_feasible: bool = True
    starts_run: int = 0
    feasible_starts: int = 0
    entries: List[EntryDoc] = Field(min_length=1)


def schedule_to_dict(schedule: StaticSchedule) -> dict:
    return {
        "tool_version": __version__,
        "policy": schedule.policy,
        "seed": schedule.seed,
        "taskset_hash": schedule.taskset_hash,
        "objective": schedule.objective,
        "status": schedule.status,
        "residual_max": schedule.residual_max,
        "rounded_feasible": schedule.rounded_feasible,
        "starts_run": schedule.starts_run,
        "feasible_starts": schedule.feasible_starts,
        "entries": [
            {
                "i": e.i, "j": e.j, "k": e.k, "order": e.order,
                "te": e.te, "w_hat": e.w_hat, "w_hat_int": e.w_hat_int,
                "ts": e.ts, "w_bar": e.w_bar, "v_bar": e.v_bar, "v_hat": e.v_hat,
            }
            for e in schedule.entries
        ],
    }


def save_schedule(schedule: StaticSchedule, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(schedule_to_dict(schedule), indent=2), encoding="utf-8")
    return path


def load_schedule(path: str | Path) -> StaticSchedule:
    path = Path(path)
    try:
        doc = ScheduleDoc.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise TaskSetFormatError(first["msg"], loc) from exc

    entries = tuple(ScheduleEntry(**e.model_dump()) for e in sorted(doc.entries, key=lambda e: e.order))
    return StaticSchedule(
        entries=entries,
        objective=doc.objective,
        policy=doc.policy,
        status=doc.status,
        residual_max=doc.residual_max,
        seed=doc.seed,
        starts_run=doc.starts_run,
        feasible_starts=doc.feasible_starts,
        rounded_feasible=doc.rounded_feasible,
        taskset_hash=doc.taskset_hash,
    )


def check_schedule_matches(schedule: StaticSchedule, fps: FPSchedule, expected_hash: str) -> None:
    """Raise ScheduleMismatchError unless the schedule was built for this task set."""
    if schedule.taskset_hash != expected_hash:
        raise ScheduleMismatchError(
            f"schedule was solved for task set {schedule.taskset_hash[:12]}, "
            f"this task set is {expected_hash[:12]}"
        )
    have = {e.key for e in schedule.entries}
    want = {s.key for s in fps}
    if have != want:
        raise ScheduleMismatchError(
            f"schedule covers {len(have)} sub-instances, expansion has {len(want)}"
        )
