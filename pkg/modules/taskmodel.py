# modules/taskmodel.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from modules.errors import HyperPeriodError
from modules.power import PowerModel, default_power_model

# time units are stored in a signed 64-bit field in the exported files
MAX_HYPER_PERIOD = 2**63 - 1


class ReleaseMode(str, Enum):
    PERIODIC = "periodic"
    # every task released once at t=0, deadline = its period field
    ONE_SHOT = "one_shot"


# -------------------------------------------------------------
# Dataclasses
# -------------------------------------------------------------
@dataclass(frozen=True)
class Task:
    index: int              # 1-based priority rank, lower = higher priority
    period: int
    wcec: int
    acec: float
    bcec: float
    capacitance: float = 1.0
    name: str = ""

    @property
    def deadline(self) -> int:
        return self.period


@dataclass(frozen=True)
class TaskInstance:
    task: int
    instance: int           # 1-based
    release: int
    deadline: int

    @property
    def key(self) -> Tuple[int, int]:
        return (self.task, self.instance)


@dataclass(frozen=True)
class TaskSet:
    tasks: Tuple[Task, ...]
    hyper_period: int
    name: str = "taskset"
    mode: ReleaseMode = ReleaseMode.PERIODIC
    power_model: PowerModel = field(default_factory=default_power_model)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "mode", ReleaseMode(self.mode))

    def task(self, index: int) -> Task:
        return self.tasks[index - 1]

    def instance_count(self, index: int) -> int:
        if self.mode is ReleaseMode.ONE_SHOT:
            return 1
        return self.hyper_period // self.task(index).period

    def with_acec(self, acec: Sequence[float]) -> "TaskSet":
        tasks = tuple(
            Task(t.index, t.period, t.wcec, float(a), t.bcec, t.capacitance, t.name)
            for t, a in zip(self.tasks, acec)
        )
        return TaskSet(tasks, self.hyper_period, self.name, self.mode, self.power_model)


# -------------------------------------------------------------
# Hyper-period
# -------------------------------------------------------------
def hyperperiod(periods: Sequence[int]) -> int:
    if not periods:
        raise HyperPeriodError("at least one period is required")
    if any(int(p) != p or p <= 0 for p in periods):
        raise HyperPeriodError(f"periods must be positive integers: {list(periods)}")

    L = math.lcm(*(int(p) for p in periods))
    if L > MAX_HYPER_PERIOD:
        raise HyperPeriodError("hyper-period too large")
    return L


# -------------------------------------------------------------
# Builders
# -------------------------------------------------------------
def build_taskset(
    rows: Sequence[Dict[str, Any]],
    name: str = "taskset",
    mode: ReleaseMode | str = ReleaseMode.PERIODIC,
    power_model: Optional[PowerModel] = None,
) -> TaskSet:
    """
    rows: {period, wcec, bcec | bcec_ratio, acec?, capacitance?, name?}
    Rows are put in rate-monotonic order; equal periods keep input order.
    """
    mode = ReleaseMode(mode)
    ordered = sorted(enumerate(rows), key=lambda pair: (int(pair[1]["period"]), pair[0]))

    tasks = []
    for rank, (_, r) in enumerate(ordered, start=1):
        wcec = int(r["wcec"])
        if r.get("bcec") is not None:
            bcec = float(r["bcec"])
        else:
            bcec = float(r.get("bcec_ratio", 1.0)) * wcec
        acec = float(r["acec"]) if r.get("acec") is not None else (bcec + wcec) / 2.0

        tasks.append(
            Task(
                index=rank,
                period=int(r["period"]),
                wcec=wcec,
                acec=acec,
                bcec=bcec,
                capacitance=float(r.get("capacitance", 1.0)),
                name=str(r.get("name") or f"T{rank}"),
            )
        )

    periods = [t.period for t in tasks]
    if mode is ReleaseMode.ONE_SHOT:
        L = max(periods)
    else:
        L = hyperperiod(periods)

    return TaskSet(
        tasks=tuple(tasks),
        hyper_period=L,
        name=name,
        mode=mode,
        power_model=power_model or default_power_model(),
    )


# -------------------------------------------------------------
# Validation
# -------------------------------------------------------------
def validate_taskset(ts: TaskSet) -> List[str]:
    errors: List[str] = []
    if not ts.tasks:
        return ["task set has no tasks"]

    for pos, t in enumerate(ts.tasks, start=1):
        label = t.name or f"T{t.index}"
        if t.index != pos:
            errors.append(f"{label}: index {t.index} at position {pos}")
        if int(t.period) != t.period or t.period <= 0:
            errors.append(f"{label}: period must be a positive integer (got {t.period})")
        if int(t.wcec) != t.wcec or t.wcec <= 0:
            errors.append(f"{label}: wcec must be a positive integer (got {t.wcec})")
        if t.bcec < 0:
            errors.append(f"{label}: bcec {t.bcec} is negative")
        if t.bcec > t.acec:
            errors.append(f"{label}: bcec {t.bcec} exceeds acec {t.acec}")
        if t.acec > t.wcec:
            errors.append(f"{label}: acec {t.acec} exceeds wcec {t.wcec}")
        if t.capacitance <= 0:
            errors.append(f"{label}: capacitance must be positive")

    for hi, lo in zip(ts.tasks, ts.tasks[1:]):
        if hi.period > lo.period:
            errors.append(
                f"priority ordering: T{hi.index} (period {hi.period}) ranks above "
                f"T{lo.index} (period {lo.period})"
            )

    if all(t.period > 0 for t in ts.tasks):
        if ts.mode is ReleaseMode.ONE_SHOT:
            if ts.hyper_period != max(t.period for t in ts.tasks):
                errors.append(f"frame length {ts.hyper_period} must equal the largest deadline")
        else:
            for t in ts.tasks:
                if ts.hyper_period % t.period:
                    errors.append(f"T{t.index}: period {t.period} does not divide L={ts.hyper_period}")
            try:
                if ts.hyper_period != hyperperiod([t.period for t in ts.tasks]):
                    errors.append(f"hyper-period {ts.hyper_period} is not the lcm of the periods")
            except HyperPeriodError as exc:
                errors.append(str(exc))

    return errors


# -------------------------------------------------------------
# Instance expansion
# -------------------------------------------------------------
def expand_instances(ts: TaskSet) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    for t in ts.tasks:
        if ts.mode is ReleaseMode.ONE_SHOT:
            out.append(TaskInstance(t.index, 1, 0, t.period))
            continue
        for j in range(1, ts.hyper_period // t.period + 1):
            out.append(TaskInstance(t.index, j, (j - 1) * t.period, j * t.period))

    out.sort(key=lambda inst: (inst.release, inst.task))
    return out


def utilization_at(ts: TaskSet, model: PowerModel, v: float) -> float:
    ct = model.ct(v)
    return sum(t.wcec * ct / t.period for t in ts.tasks)
