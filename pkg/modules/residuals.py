# modules/residuals.py
"""
Constraint residuals of a static schedule, evaluated directly from the
schedule rows. Nothing here is shared with the optimizer's reduced model.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

from modules.fps import FPSchedule
from modules.taskmodel import TaskSet


# one entry per constraint family; the first group is checked per sub-instance,
# the second per task instance
PER_SUB_INSTANCE = (
    "release",
    "deadline",
    "voltage_range",
    "average_end",
    "worst_window",
    "average_start",
    "average_within_budget",
    "fill_case",
)
PER_INSTANCE = ("average_total", "worst_total")
FAMILIES = PER_SUB_INSTANCE + PER_INSTANCE + ("budget_sign",)


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    by_family: Dict[str, float] = field(default_factory=dict)
    worst: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_residual <= tol


def _ct(model, v: float) -> float:
    if model.variant.value == "inverse_law":
        return model.lam / v
    return model.lam * v / (v - model.vth) ** model.alpha


def constraint_residuals(
    rows: Sequence,
    fps: FPSchedule,
    taskset: TaskSet,
    model,
    acec: Optional[Mapping[int, float]] = None,
) -> ResidualReport:
    """
    rows: objects with i, j, k, te, ts, w_hat, w_bar, v_bar, v_hat, one per
    sub-instance. acec overrides the per-task average cycles (WCS uses wcec).
    Residuals are violations scaled by the constraint's magnitude; 0 = satisfied.
    """
    by_key = {(r.i, r.j, r.k): r for r in rows}
    avg = dict(acec) if acec is not None else {t.index: t.acec for t in taskset.tasks}

    fam: Dict[str, float] = dict.fromkeys(FAMILIES, 0.0)
    worst: Dict[str, Tuple[int, int, int]] = {}

    def note(name: str, value: float, scale: float, key):
        r = max(0.0, value) / max(1.0, abs(scale))
        if r > fam[name]:
            fam[name] = r
            worst[name] = key

    te_prev = 0.0
    prev = None
    for sub in fps:
        key = sub.key
        r = by_key[key]
        R, D = sub.release, sub.deadline
        time_scale = max(D, 1)

        note("release", R - r.ts, time_scale, key)
        note("deadline", r.te - D, time_scale, key)
        for v in (r.v_bar, r.v_hat):
            note("voltage_range", model.vmin - v, model.vmax, key)
            note("voltage_range", v - model.vmax, model.vmax, key)
        note("average_end", abs(r.te - r.ts - r.w_hat * _ct(model, r.v_bar)), time_scale, key)
        note("worst_window", r.w_hat * _ct(model, r.v_hat) - (r.te - max(te_prev, R)), time_scale, key)

        bound = 0.0 if prev is None else prev.te - (prev.w_hat - prev.w_bar) * _ct(model, prev.v_bar)
        note("average_start", max(R, bound) - r.ts, time_scale, key)
        note("average_within_budget", r.w_bar - r.w_hat, r.w_hat, key)
        note("budget_sign", -r.w_hat, 1.0, key)

        te_prev = r.te
        prev = r

    for (i, j), subs in fps.by_instance.items():
        wbar_i = avg[i]
        wcec_i = taskset.task(i).wcec
        rs = [by_key[s.key] for s in subs]
        note("average_total", abs(sum(x.w_bar for x in rs) - wbar_i), wbar_i, subs[0].key)
        note("worst_total", abs(sum(x.w_hat for x in rs) - wcec_i), wcec_i, subs[0].key)

        acc = 0.0
        for s, x in zip(subs, rs):
            acc += x.w_bar
            ol = wbar_i - acc
            # case 1 (ol > 0) forces w_bar == w_hat
            note("fill_case", (x.w_hat - x.w_bar) * ol, wcec_i * max(1.0, wbar_i), s.key)
            note("fill_case", -ol, max(1.0, wbar_i), s.key)

    return ResidualReport(max(fam.values()), fam, worst)
