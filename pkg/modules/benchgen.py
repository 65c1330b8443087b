# modules/benchgen.py
"""
Random task sets for energy experiments: uniform integer periods, WCEC scaled
to a target utilization at vmax, BCEC/ACEC derived from a fixed ratio.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from tenacity import (
    RetryError,
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from modules.errors import GenerationError
from modules.fps import build_fps
from modules.optimizer import build_nlp, schedulability_witness
from modules.power import PowerModel, default_power_model
from modules.settings import get_settings
from modules.taskmodel import TaskSet, build_taskset, utilization_at

logger = logging.getLogger(__name__)

UTILIZATION_TOL = 0.01


class _Rejected(Exception):
    """One draw failed a constraint; the reason names it."""


@dataclass(frozen=True)
class GenSpec:
    n_tasks: int
    ratio: float
    utilization: float = 0.7
    period_min: int = 10
    period_max: int = 100
    max_sub_instances: int = 1000
    capacitance: float = 1.0
    seed: int = 0
    stream: int = 0
    max_retries: int = 200
    power_model: PowerModel = field(default_factory=default_power_model)

    @classmethod
    def from_settings(cls, n_tasks: int, ratio: float, **overrides) -> "GenSpec":
        gen = dict(get_settings().generation)
        gen.update({k: v for k, v in overrides.items() if v is not None})
        known = {k: gen[k] for k in cls.__dataclass_fields__ if k in gen}
        return cls(n_tasks=n_tasks, ratio=ratio, **known)

    def validate(self) -> List[str]:
        errors = []
        if self.n_tasks < 1:
            errors.append("n_tasks must be >= 1")
        if not (0 < self.ratio <= 1):
            errors.append(f"ratio must be in (0, 1] (got {self.ratio})")
        if not (0 < self.utilization < 1):
            errors.append(f"utilization must be in (0, 1) (got {self.utilization})")
        if self.period_min < 1 or self.period_min > self.period_max:
            errors.append(f"bad period range [{self.period_min}, {self.period_max}]")
        if self.max_sub_instances < self.n_tasks:
            errors.append("max_sub_instances is below the task count")
        if self.capacitance <= 0:
            errors.append("capacitance must be positive")
        if self.max_retries < 1:
            errors.append("max_retries must be >= 1")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["power_model"] = self.power_model.to_dict()
        return d


# -------------------------------------------------------------
# Sub-instance counting straight from the periods
# -------------------------------------------------------------
def _count_from_periods(periods: List[int], cap: int) -> Optional[int]:
    """Pieces of the fully preemptive expansion, or None once it passes cap."""
    ordered = sorted(periods)
    L = math.lcm(*ordered)
    if sum(L // p for p in ordered) > cap:
        return None

    total = 0
    for idx, p in enumerate(ordered):
        higher = ordered[:idx]
        for r in range(0, L, p):
            total += 1
            for h in higher:
                # releases strictly inside (r, r + p)
                total += (r + p - 1) // h - r // h
            if total > cap:
                return None
    return total


def _draw_periods(gen: GenSpec, rng: np.random.Generator) -> List[int]:
    """
    Sequential uniform draws. A candidate is allowed only if the set can still
    be completed by repeating its largest period, so the draw never dead-ends.
    """
    candidates = [int(p) for p in np.arange(gen.period_min, gen.period_max + 1)]
    periods: List[int] = []
    for left in range(gen.n_tasks - 1, -1, -1):
        ok = []
        for p in candidates:
            trial = periods + [p]
            completion = trial + [max(trial)] * left
            if _count_from_periods(completion, gen.max_sub_instances) is not None:
                ok.append(p)
        if not ok:
            raise _Rejected(
                f"no period in [{gen.period_min}, {gen.period_max}] keeps the expansion "
                f"under {gen.max_sub_instances} sub-instances"
            )
        periods.append(int(rng.choice(ok)))
    return periods


def _scale_wcec(gen: GenSpec, periods: List[int], rng: np.random.Generator) -> List[int]:
    ct = gen.power_model.ct_at_vmax
    raw = rng.uniform(0.0, 1.0, gen.n_tasks)
    share = gen.utilization * raw / raw.sum()

    wcec = [max(1, int(round(u * p / ct))) for u, p in zip(share, periods)]
    # one correction pass on the task with the largest share
    big = int(np.argmax(share))
    achieved = sum(w * ct / p for w, p in zip(wcec, periods))
    wcec[big] = max(1, wcec[big] + int(round((gen.utilization - achieved) * periods[big] / ct)))

    achieved = sum(w * ct / p for w, p in zip(wcec, periods))
    if abs(achieved - gen.utilization) > UTILIZATION_TOL:
        raise _Rejected(
            f"utilization {achieved:.4f} misses target {gen.utilization} by more than {UTILIZATION_TOL}"
        )
    return wcec


def _draw(gen: GenSpec, rng: np.random.Generator, name: str) -> TaskSet:
    periods = _draw_periods(gen, rng)
    wcec = _scale_wcec(gen, periods, rng)
    rows = [
        {
            "period": p,
            "wcec": w,
            "bcec": gen.ratio * w,
            "capacitance": gen.capacitance,
        }
        for p, w in zip(periods, wcec)
    ]
    ts = build_taskset(rows, name=name, power_model=gen.power_model)

    fps = build_fps(ts, gen.max_sub_instances)
    witness = schedulability_witness(build_nlp(fps, ts, gen.power_model))
    if witness:
        raise _Rejected(f"not RM-schedulable at vmax: {witness[0]}")
    return ts


def generate_taskset(gen: GenSpec, name: Optional[str] = None) -> TaskSet:
    problems = gen.validate()
    if problems:
        raise ValueError("; ".join(problems))

    rng = np.random.default_rng([gen.seed, gen.stream])
    name = name or f"gen_n{gen.n_tasks}_r{gen.ratio:g}_s{gen.seed}_{gen.stream}"

    try:
        for attempt in Retrying(
            stop=stop_after_attempt(gen.max_retries),
            retry=retry_if_exception_type(_Rejected),
            before_sleep=before_sleep_log(logger, logging.DEBUG),
        ):
            with attempt:
                ts = _draw(gen, rng, name)
    except RetryError as exc:
        reason = exc.last_attempt.exception()
        raise GenerationError(
            f"gave up after {gen.max_retries} draws: {reason}"
        ) from reason

    logger.debug(
        "task set generated",
        extra={
            "taskset": ts.name,
            "tasks": gen.n_tasks,
            "hyper_period": ts.hyper_period,
            "utilization": utilization_at(ts, gen.power_model, gen.power_model.vmax),
            "attempts": attempt.retry_state.attempt_number,
        },
    )
    return ts
