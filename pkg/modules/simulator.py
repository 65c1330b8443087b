# modules/simulator.py
"""
Runtime DVS simulation of a static schedule over one hyper-period, with
greedy slack reclamation, plus seeded Monte Carlo aggregation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from modules.fps import FPSchedule
from modules.optimizer import StaticSchedule
from modules.power import PowerModel, energy, exec_time, voltage_for_duration
from modules.taskmodel import TaskSet, expand_instances

logger = logging.getLogger(__name__)

_EXHAUST_TOL = 1e-9
FIXED_WORKLOADS = ("acec", "wcec", "bcec")

InstanceKey = Tuple[int, int]


# ============================================================
# Workload sampling
# ============================================================
@dataclass(frozen=True)
class WorkloadSampler:
    mean: Tuple[float, ...]
    sigma: Tuple[float, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @classmethod
    def from_taskset(cls, ts: TaskSet) -> "WorkloadSampler":
        return cls(
            mean=tuple(float(t.acec) for t in ts.tasks),
            sigma=tuple((t.wcec - t.bcec) / 6.0 for t in ts.tasks),
            lower=tuple(float(t.bcec) for t in ts.tasks),
            upper=tuple(float(t.wcec) for t in ts.tasks),
        )


def sample_cycles(sampler: WorkloadSampler, task: int, rng: np.random.Generator) -> int:
    """Normal draw clamped to [BCEC, WCEC], rounded to whole cycles."""
    i = task - 1
    lo, hi = sampler.lower[i], sampler.upper[i]
    if sampler.sigma[i] <= 0:
        return int(round(hi))
    x = rng.normal(sampler.mean[i], sampler.sigma[i])
    x = float(np.rint(np.clip(x, lo, hi)))
    # rounding can step below a fractional BCEC
    return int(min(max(x, math.ceil(lo - 1e-9), 0.0), hi))


def sample_hyper_period(
    sampler: WorkloadSampler, ts: TaskSet, rng: np.random.Generator
) -> Dict[InstanceKey, float]:
    return {inst.key: sample_cycles(sampler, inst.task, rng) for inst in expand_instances(ts)}


def fixed_cycles(ts: TaskSet, which: str) -> Dict[InstanceKey, float]:
    if which not in FIXED_WORKLOADS:
        raise ValueError(f"unknown fixed workload '{which}', expected one of {FIXED_WORKLOADS}")
    return {inst.key: float(getattr(ts.task(inst.task), which)) for inst in expand_instances(ts)}


# ============================================================
# Trace
# ============================================================
@dataclass(frozen=True)
class SegmentRecord:
    i: int
    j: int
    k: int
    start: float
    voltage: float
    cycles: float
    duration: float
    energy: float
    clamped: bool = False

    @property
    def finish(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class InstanceOutcome:
    finish: float
    deadline: int
    met: bool


@dataclass(frozen=True)
class Trace:
    segments: Tuple[SegmentRecord, ...]
    outcomes: Dict[InstanceKey, InstanceOutcome]
    energy: float
    misses: int
    risk_events: Tuple[str, ...] = ()


def _check_cycles(ts: TaskSet, fps: FPSchedule, actual: Mapping[InstanceKey, float]) -> None:
    for key in fps.by_instance:
        if key not in actual:
            raise ValueError(f"no cycle count for instance {key}")
        c = actual[key]
        wcec = ts.task(key[0]).wcec
        if c < 0 or c > wcec * (1 + _EXHAUST_TOL):
            raise ValueError(f"cycles {c} for instance {key} outside [0, {wcec}]")


def run_trial(
    schedule: StaticSchedule,
    fps: FPSchedule,
    taskset: TaskSet,
    model: PowerModel,
    actual_cycles: Mapping[InstanceKey, float],
) -> Trace:
    """
    Follow the static total order. Each piece may start as soon as its
    predecessor finished (and it is released) and runs the voltage that fits
    its full budget into the time left before its end time.
    """
    _check_cycles(taskset, fps, actual_cycles)
    rows = schedule.by_key()

    remaining = {key: float(c) for key, c in actual_cycles.items()}
    finish: Dict[InstanceKey, float] = {}
    segments: List[SegmentRecord] = []
    risks: List[str] = []

    t = 0.0
    E = 0.0
    for sub in fps:
        parent = sub.parent
        rem = remaining[parent]
        budget = rows[sub.key].w_hat
        exec_cycles = min(rem, budget)
        if exec_cycles <= 0:
            continue

        start = max(t, float(sub.release))
        window = rows[sub.key].te - start
        clamped = False
        if window <= 0:
            v = model.vmax
            clamped = True
        else:
            choice = voltage_for_duration(model, budget, window)
            v = choice.voltage
            clamped = not choice.feasible
        if clamped:
            risks.append(f"({sub.task},{sub.instance},{sub.k}) needs more than vmax at t={start:.6g}")

        duration = exec_time(model, exec_cycles, v)
        e = energy(taskset.task(sub.task).capacitance, exec_cycles, v)
        E += e
        t = start + duration
        segments.append(
            SegmentRecord(sub.task, sub.instance, sub.k, start, v, exec_cycles, duration, e, clamped)
        )

        rem -= exec_cycles
        if rem <= _EXHAUST_TOL * max(1.0, actual_cycles[parent]):
            rem = 0.0
            finish.setdefault(parent, t)
        remaining[parent] = rem

    outcomes: Dict[InstanceKey, InstanceOutcome] = {}
    misses = 0
    for parent, subs in fps.by_instance.items():
        D = subs[0].deadline
        if actual_cycles[parent] <= 0:
            outcomes[parent] = InstanceOutcome(float(subs[0].release), D, True)
            continue
        done = finish.get(parent, math.inf)
        met = done <= D * (1 + 1e-9) + 1e-12
        misses += 0 if met else 1
        outcomes[parent] = InstanceOutcome(done, D, met)

    return Trace(tuple(segments), outcomes, E, misses, tuple(risks))


# ============================================================
# Monte Carlo
# ============================================================
@dataclass(frozen=True)
class MonteCarloResult:
    policy: str
    trials: int
    mean_energy: float
    std_energy: float
    min_energy: float
    max_energy: float
    misses: int
    seed: int
    risk_events: int = 0
    energies: Tuple[float, ...] = field(default=(), repr=False)


def trial_cycles(
    taskset: TaskSet, seed: int, trial: int, fixed: Optional[str] = None
) -> Dict[InstanceKey, float]:
    """Cycles for one trial; the stream depends only on (seed, trial) so schedules can be paired."""
    if fixed:
        return fixed_cycles(taskset, fixed)
    rng = np.random.default_rng([seed, trial])
    return sample_hyper_period(WorkloadSampler.from_taskset(taskset), taskset, rng)


def _trial_batch(schedule, fps, taskset, model, seed, trials, fixed, keep_traces):
    out = []
    for trial in trials:
        trace = run_trial(schedule, fps, taskset, model, trial_cycles(taskset, seed, trial, fixed))
        out.append((trial, trace if keep_traces else None, trace.energy, trace.misses, len(trace.risk_events)))
    return out


def run_monte_carlo(
    schedule: StaticSchedule,
    fps: FPSchedule,
    taskset: TaskSet,
    model: PowerModel,
    trials: int,
    seed: int = 0,
    n_jobs: int = 1,
    fixed: Optional[str] = None,
    traces: Optional[List[Tuple[int, Trace]]] = None,
) -> MonteCarloResult:
    """
    Repeat the hyper-period `trials` times with sampled cycles.
    When `traces` is a list, (trial, Trace) pairs are appended to it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")

    keep = traces is not None
    chunks = np.array_split(np.arange(trials), max(1, min(trials, n_jobs if n_jobs > 0 else 8)))
    batches = Parallel(n_jobs=n_jobs)(
        delayed(_trial_batch)(schedule, fps, taskset, model, seed, c.tolist(), fixed, keep)
        for c in chunks
        if len(c)
    )
    results = sorted((r for batch in batches for r in batch), key=lambda r: r[0])

    energies = np.array([r[2] for r in results], dtype=float)
    misses = int(sum(r[3] for r in results))
    risks = int(sum(r[4] for r in results))
    if keep:
        traces.extend((r[0], r[1]) for r in results)
    if misses:
        logger.warning(
            "deadline misses in simulation",
            extra={"policy": schedule.policy, "misses": misses, "seed": seed},
        )

    return MonteCarloResult(
        policy=schedule.policy,
        trials=trials,
        mean_energy=float(energies.mean()),
        std_energy=float(energies.std()),
        min_energy=float(energies.min()),
        max_energy=float(energies.max()),
        misses=misses,
        seed=seed,
        risk_events=risks,
        energies=tuple(energies.tolist()),
    )
