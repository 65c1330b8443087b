# modules/optimizer.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from modules.errors import FillError, InfeasibleScheduleError
from modules.fps import FPSchedule, Key
from modules.power import FEASIBILITY_RTOL, PowerModel, voltage_for_duration
from modules.residuals import PER_INSTANCE, PER_SUB_INSTANCE, constraint_residuals
from modules.settings import get_settings
from modules.taskmodel import TaskSet

logger = logging.getLogger(__name__)

_FILL_RTOL = 1e-9
_ARMIJO = 1e-4
# budgets below this share of the WCEC are folded into a sibling piece
MIN_BUDGET_RTOL = 1e-9
WINDOW_MARGIN_RTOL = 2 * FEASIBILITY_RTOL


# ============================================================
# Average-case fill of the worst-case budgets
# ============================================================
def average_fill(w_avg: float, w_hat: Sequence[float]) -> List[float]:
    """
    Pour the average workload into the sub-instance budgets in order: a piece
    only receives work once every earlier piece is full.
    """
    total = float(sum(w_hat))
    if w_avg - total > _FILL_RTOL * max(1.0, abs(w_avg)):
        raise FillError(f"average workload {w_avg} exceeds total budget {total}")

    out = []
    acc = 0.0
    for w in w_hat:
        if w < 0:
            raise FillError(f"negative budget {w}")
        out.append(min(w, max(0.0, w_avg - acc)))
        acc += w
    return out


def project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {y >= 0, sum(y) = z} (sort based)."""
    if v.size == 1:
        return np.array([z], dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


# ============================================================
# Options
# ============================================================
@dataclass(frozen=True)
class SolverOptions:
    starts: int = 16
    max_iter: int = 500
    pg_tol: float = 1e-9
    stall_tol: float = 1e-12
    penalty_rounds: Tuple[float, ...] = (1e3, 1e5, 1e7)
    feasibility_tol: float = 1e-9
    n_jobs: int = 1
    seed: int = 0

    @classmethod
    def from_settings(cls, **overrides) -> "SolverOptions":
        raw = dict(get_settings().solver)
        raw["penalty_rounds"] = tuple(raw.get("penalty_rounds", cls.penalty_rounds))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**{k: raw[k] for k in cls.__dataclass_fields__ if k in raw})

    def validate(self) -> List[str]:
        errors = []
        if self.starts < 1:
            errors.append("starts must be >= 1")
        if self.max_iter < 1:
            errors.append("max_iter must be >= 1")
        if not self.penalty_rounds:
            errors.append("penalty_rounds must not be empty")
        return errors


# ============================================================
# Problem
# ============================================================
@dataclass(frozen=True)
class NlpProblem:
    fps: FPSchedule
    taskset: TaskSet
    model: PowerModel
    acec: Tuple[float, ...]          # W̄_i per task, index i-1

    # layout in total order (filled in __post_init__)
    task_of: Tuple[int, ...] = field(init=False, compare=False, repr=False)
    cap: Tuple[float, ...] = field(init=False, compare=False, repr=False)
    release: Tuple[float, ...] = field(init=False, compare=False, repr=False)
    deadline: Tuple[float, ...] = field(init=False, compare=False, repr=False)
    groups: Tuple[Tuple[int, ...], ...] = field(init=False, compare=False, repr=False)
    group_of: Tuple[int, ...] = field(init=False, compare=False, repr=False)
    group_wcec: Tuple[float, ...] = field(init=False, compare=False, repr=False)
    group_acec: Tuple[float, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        subs = self.fps.sub_instances
        ts = self.taskset
        groups = [tuple(s.order for s in members) for members in self.fps.by_instance.values()]
        groups.sort(key=lambda g: g[0])
        group_of = [0] * len(subs)
        for g, members in enumerate(groups):
            for k in members:
                group_of[k] = g

        setter = object.__setattr__
        setter(self, "task_of", tuple(s.task for s in subs))
        setter(self, "cap", tuple(ts.task(s.task).capacitance for s in subs))
        setter(self, "release", tuple(float(s.release) for s in subs))
        setter(self, "deadline", tuple(float(s.deadline) for s in subs))
        setter(self, "groups", tuple(groups))
        setter(self, "group_of", tuple(group_of))
        setter(self, "group_wcec", tuple(float(ts.task(subs[g[0]].task).wcec) for g in groups))
        setter(self, "group_acec", tuple(float(self.acec[subs[g[0]].task - 1]) for g in groups))

    @property
    def n(self) -> int:
        return len(self.fps)

    @property
    def variable_count(self) -> int:
        # ts, te, w̄, ŵ, v̄, v̂ per sub-instance
        return 6 * self.n

    @property
    def constraint_counts(self) -> Dict[str, int]:
        counts = {name: self.n for name in PER_SUB_INSTANCE}
        counts.update({name: len(self.groups) for name in PER_INSTANCE})
        return counts

    @property
    def energy_scale(self) -> float:
        vmax2 = self.model.vmax ** 2
        avg = sum(self.cap[g[0]] * a for g, a in zip(self.groups, self.group_acec)) * vmax2
        if avg > 0:
            return avg
        return sum(self.cap[g[0]] * w for g, w in zip(self.groups, self.group_wcec)) * vmax2

    def worst_case(self) -> "NlpProblem":
        wcec = tuple(float(t.wcec) for t in self.taskset.tasks)
        return NlpProblem(self.fps, self.taskset, self.model, wcec)

    def fill(self, w_hat: Sequence[float]) -> Tuple[List[float], List[int]]:
        """
        w̄ per sub-instance plus the branch taken:
        0 = budget filled (w̄ = ŵ), 1 = remainder piece, 2 = idle piece.
        """
        w_bar = [0.0] * self.n
        case = [2] * self.n
        for members, w_avg in zip(self.groups, self.group_acec):
            total = sum(w_hat[k] for k in members)
            if w_avg - total > _FILL_RTOL * max(1.0, w_avg):
                raise FillError(f"average workload {w_avg} exceeds total budget {total}")
            acc = 0.0
            for k in members:
                rem = w_avg - acc
                w = w_hat[k]
                if w <= rem:
                    w_bar[k] = w
                    case[k] = 0
                elif rem > 0:
                    w_bar[k] = rem
                    case[k] = 1
                acc += w
        return w_bar, case


def build_nlp(fps: FPSchedule, taskset: TaskSet, model: PowerModel) -> NlpProblem:
    return NlpProblem(fps, taskset, model, tuple(float(t.acec) for t in taskset.tasks))


# ============================================================
# Static schedule
# ============================================================
@dataclass(frozen=True)
class ScheduleEntry:
    i: int
    j: int
    k: int
    order: int
    te: float
    w_hat: float
    w_hat_int: int
    ts: float
    w_bar: float
    v_bar: float
    v_hat: float

    @property
    def key(self) -> Key:
        return (self.i, self.j, self.k)


@dataclass(frozen=True)
class StaticSchedule:
    entries: Tuple[ScheduleEntry, ...]
    objective: float
    policy: str = "acs"
    status: str = "evaluated"
    residual_max: float = 0.0
    seed: int = 0
    starts_run: int = 0
    feasible_starts: int = 0
    rounded_feasible: bool = True
    taskset_hash: str = ""

    def entry(self, key: Key) -> ScheduleEntry:
        for e in self.entries:
            if e.key == key:
                return e
        raise KeyError(key)

    @property
    def te(self) -> List[float]:
        return [e.te for e in self.entries]

    @property
    def w_hat(self) -> List[float]:
        return [e.w_hat for e in self.entries]

    def by_key(self) -> Dict[Key, ScheduleEntry]:
        return {e.key: e for e in self.entries}


def _round_budgets(problem: NlpProblem, w_hat: Sequence[float]) -> List[int]:
    """Largest-remainder rounding so each instance still sums to its WCEC."""
    out = [0] * problem.n
    for members, total in zip(problem.groups, problem.group_wcec):
        floors = {k: math.floor(max(0.0, w_hat[k]) + 1e-9) for k in members}
        left = int(round(total)) - sum(floors.values())
        by_frac = sorted(members, key=lambda k: (-(w_hat[k] - floors[k]), k))
        for k in by_frac[: max(0, left)]:
            floors[k] += 1
        for k in reversed(by_frac):
            if left >= 0:
                break
            if floors[k] > 0:
                floors[k] -= 1
                left += 1
        for k in members:
            out[k] = floors[k]
    return out


def evaluate_point(problem: NlpProblem, te: Sequence[float], w_hat: Sequence[float]):
    """
    Recover ts, w̄, v̄, v̂ and the predicted average-case energy for a given
    assignment of end times and budgets.
    """
    model = problem.model
    w_bar, _ = problem.fill(w_hat)

    ts_out, vbar_out, vhat_out = [], [], []
    te_prev = 0.0
    a = 0.0
    E = 0.0
    for k in range(problem.n):
        R = problem.release[k]
        w = w_hat[k]
        t_end = te[k]
        lb = max(R, a)
        if w > 0:
            win = t_end - lb
            v_bar = voltage_for_duration(model, w, win).voltage if win > 0 else model.vmax
            ct = model.ct(v_bar)
            ts = t_end - w * ct
            win_hat = t_end - max(te_prev, R)
            v_hat = voltage_for_duration(model, w, win_hat).voltage if win_hat > 0 else model.vmax
        else:
            # no work: voltages reported at vmin
            v_bar = v_hat = model.vmin
            ct = model.ct_at_vmin
            ts = t_end

        E += problem.cap[k] * w_bar[k] * v_bar * v_bar
        ts_out.append(ts)
        vbar_out.append(v_bar)
        vhat_out.append(v_hat)
        a = t_end - (w - w_bar[k]) * ct
        te_prev = t_end

    return ts_out, w_bar, vbar_out, vhat_out, E


def _worst_case_run(problem: NlpProblem, te: Sequence[float], w_hat: Sequence[float]):
    """All-WCEC trajectory following the total order; returns (energy, violations)."""
    model = problem.model
    subs = problem.fps.sub_instances
    t = 0.0
    E = 0.0
    violations: List[str] = []
    for k, sub in enumerate(subs):
        w = w_hat[k]
        if w <= 0:
            continue
        start = max(t, problem.release[k])
        window = te[k] - start
        label = f"({sub.task},{sub.instance},{sub.k})"
        if window <= 0:
            violations.append(f"{label} starts at {start:.6g} at or after its end time {te[k]:.6g}")
            v = model.vmax
        else:
            choice = voltage_for_duration(model, w, window)
            v = choice.voltage
            if not choice.feasible:
                violations.append(
                    f"{label} needs more than vmax={model.vmax} to run {w:.6g} cycles "
                    f"in {window:.6g}"
                )
        finish = start + w * model.ct(v)
        if finish > te[k] * (1 + 1e-9) + 1e-12:
            violations.append(f"{label} finishes at {finish:.6g} after te={te[k]:.6g}")
        if finish > problem.deadline[k] * (1 + 1e-9) + 1e-12:
            violations.append(f"{label} finishes at {finish:.6g} after D={problem.deadline[k]:g}")
        E += problem.cap[k] * w * v * v
        t = finish
    return E, violations


def schedule_from_end_times(
    problem: NlpProblem,
    te: Sequence[float],
    w_hat: Sequence[float],
    policy: str = "manual",
    status: str = "evaluated",
    seed: int = 0,
    starts_run: int = 0,
    feasible_starts: int = 0,
) -> StaticSchedule:
    te = [float(x) for x in te]
    w_hat = [float(x) for x in w_hat]
    ts, w_bar, v_bar, v_hat, E = evaluate_point(problem, te, w_hat)
    w_int = _round_budgets(problem, w_hat)

    entries = tuple(
        ScheduleEntry(
            i=s.task, j=s.instance, k=s.k, order=s.order,
            te=te[n], w_hat=w_hat[n], w_hat_int=w_int[n],
            ts=ts[n], w_bar=w_bar[n], v_bar=v_bar[n], v_hat=v_hat[n],
        )
        for n, s in enumerate(problem.fps.sub_instances)
    )
    report = constraint_residuals(
        entries, problem.fps, problem.taskset, problem.model,
        acec={t.index: problem.acec[t.index - 1] for t in problem.taskset.tasks},
    )
    _, rounded_violations = _worst_case_run(problem, te, [float(x) for x in w_int])

    return StaticSchedule(
        entries=entries,
        objective=E,
        policy=policy,
        status=status,
        residual_max=report.max_residual,
        seed=seed,
        starts_run=starts_run,
        feasible_starts=feasible_starts,
        rounded_feasible=not rounded_violations,
    )


# ============================================================
# Worst-case compaction at V_max
# ============================================================
def worst_case_compaction(problem: NlpProblem) -> Tuple[List[float], List[float], List[str]]:
    """
    All-WCEC execution at vmax in total order, each non-final piece running
    until its segment end. Returns (te, ŵ, deadline violations).
    """
    c = problem.model.ct_at_vmax
    subs = problem.fps.sub_instances
    remaining = list(problem.group_wcec)
    last = {g[-1] for g in problem.groups}

    te, w_hat, violations = [], [], []
    t = 0.0
    for k, sub in enumerate(subs):
        g = problem.group_of[k]
        start = max(t, problem.release[k])
        if k in last:
            cycles = remaining[g]
        else:
            cycles = min(remaining[g], max(0.0, (sub.seg_end - start) / c))
        remaining[g] -= cycles
        finish = start + cycles * c
        if k in last and finish > problem.deadline[k] * (1 + 1e-12):
            violations.append(
                f"T{sub.task},{sub.instance} finishes at {finish:.6g} > D={sub.deadline} "
                f"with all tasks at WCEC and vmax={problem.model.vmax}"
            )
        te.append(finish)
        w_hat.append(cycles)
        t = finish
    return te, w_hat, violations


# ============================================================
# Verifier-safe end times
# ============================================================
def _fold_tiny_budgets(problem: NlpProblem, w_hat: Sequence[float]) -> List[float]:
    """Move budgets below MIN_BUDGET_RTOL * WCEC onto the largest piece of the same instance."""
    out = [max(0.0, float(w)) for w in w_hat]
    for members, total in zip(problem.groups, problem.group_wcec):
        floor = MIN_BUDGET_RTOL * total
        tiny = [k for k in members if 0.0 < out[k] < floor]
        if not tiny:
            continue
        target = max(members, key=lambda k: (out[k], -k))
        for k in tiny:
            if k != target:
                out[target] += out[k]
                out[k] = 0.0
    return out


def _widened_end_times(problem: NlpProblem, te: Sequence[float], w_hat: Sequence[float]) -> List[float]:
    """
    Push each end time out so its worst-case window holds the budget at vmax
    with margin, never past the deadline.
    """
    c = problem.model.ct_at_vmax
    out: List[float] = []
    prev = 0.0
    for k in range(problem.n):
        D = problem.deadline[k]
        base = max(prev, problem.release[k])
        t = max(float(te[k]), base)
        if w_hat[k] > 0:
            need = base + w_hat[k] * c * (1 + WINDOW_MARGIN_RTOL) + FEASIBILITY_RTOL * D
            t = max(t, min(need, D))
        t = min(t, D)
        out.append(t)
        prev = t
    return out


def make_verifiable(
    problem: NlpProblem, te: Sequence[float], w_hat: Sequence[float]
) -> Tuple[List[float], List[float], List[str]]:
    """
    Returns (te, ŵ, violations). The violations come from the same all-WCEC
    run verify_worst_case performs, so an empty list means the schedule passes.
    """
    w_hat = _fold_tiny_budgets(problem, w_hat)
    te = _widened_end_times(problem, te, w_hat)
    _, violations = _worst_case_run(problem, te, w_hat)
    return te, w_hat, violations


def schedulability_witness(problem: NlpProblem) -> List[str]:
    """Empty when the compaction at vmax survives the worst-case check."""
    te_c, w_c, witness = worst_case_compaction(problem)
    if witness:
        return witness
    return make_verifiable(problem, te_c, w_c)[2]


# ============================================================
# Reduced objective over (σ, u)
#   te_k = low_k + σ_k (D_k - low_k),  low_k = max(te_prev, R_k) + ŵ_k CT(vmax)
#   ŵ = u * Ŵ_i with u on the unit simplex of each instance
# ============================================================
class ReducedObjective:
    def __init__(self, problem: NlpProblem):
        self.problem = problem
        self.scale = problem.energy_scale
        self.wcec_of = [problem.group_wcec[g] for g in problem.group_of]

    def w_hat(self, u: Sequence[float]) -> List[float]:
        return [ui * w for ui, w in zip(u, self.wcec_of)]

    def end_times(self, sigma: Sequence[float], w_hat: Sequence[float]) -> Tuple[List[float], float]:
        p = self.problem
        c_max = p.model.ct_at_vmax
        te = []
        worst = 0.0
        T_prev = 0.0
        for k in range(p.n):
            R = p.release[k]
            D = p.deadline[k]
            low = (T_prev if T_prev >= R else R) + c_max * w_hat[k]
            if low > D:
                worst = max(worst, (low - D) / D)
            T_prev = low + sigma[k] * (D - low)
            te.append(T_prev)
        return te, worst

    def sigma_for(self, te: Sequence[float], w_hat: Sequence[float]) -> List[float]:
        p = self.problem
        c_max = p.model.ct_at_vmax
        sigma = []
        T_prev = 0.0
        for k in range(p.n):
            R = p.release[k]
            D = p.deadline[k]
            low = (T_prev if T_prev >= R else R) + c_max * w_hat[k]
            if D - low > 1e-15:
                s = min(1.0, max(0.0, (te[k] - low) / (D - low)))
            else:
                s = 0.0
            sigma.append(s)
            T_prev = low + s * (D - low)
        return sigma

    def __call__(self, sigma, u, rho: float, grad: bool = True):
        """Returns (scaled energy + penalty, energy, worst violation, g_sigma, g_u)."""
        p = self.problem
        model = p.model
        c_max = model.ct_at_vmax
        ct_vmin = model.ct_at_vmin
        vmin, vmax = model.vmin, model.vmax
        inv_v = model.voltage_at_cycle_time
        ct_prime = model.ct_prime
        cap, rel, dl = p.cap, p.release, p.deadline
        n = p.n

        w_hat = self.w_hat(u)
        w_bar, case = p.fill(w_hat)

        # forward
        rec = []
        T_prev = 0.0
        a = 0.0
        E = 0.0
        pen = 0.0
        worst = 0.0
        for k in range(n):
            R = rel[k]
            D = dl[k]
            w = w_hat[k]
            mflag = T_prev >= R
            low = (T_prev if mflag else R) + c_max * w
            if low > D:
                viol = (low - D) / D
                pen += viol * viol
                worst = max(worst, viol)
            s = sigma[k]
            t_end = low + s * (D - low)
            aflag = a > R
            lb = a if aflag else R
            win = t_end - lb
            free = False
            if w > 0 and win > 0:
                creq = win / w
                if creq >= ct_vmin:
                    ct, v = ct_vmin, vmin
                elif creq <= c_max:
                    ct, v = c_max, vmax
                else:
                    ct, v = creq, inv_v(creq)
                    free = True
            elif w > 0:
                ct, v = c_max, vmax
            else:
                ct, v = ct_vmin, vmin
            wb = w_bar[k]
            E += cap[k] * wb * v * v
            rec.append((mflag, low, aflag, win, ct, v, free))
            a = t_end - (w - wb) * ct
            T_prev = t_end

        f = E / self.scale + 0.5 * rho * pen
        if not grad:
            return f, E, worst, None, None

        # reverse sweep
        inv_scale = 1.0 / self.scale
        g_sigma = [0.0] * n
        g_w = [0.0] * n
        g_wbar = [0.0] * n
        ga = 0.0
        gT = 0.0
        for k in range(n - 1, -1, -1):
            mflag, low, aflag, win, ct, v, free = rec[k]
            w = w_hat[k]
            wb = w_bar[k]
            D = dl[k]
            s = sigma[k]

            gte = gT + ga
            g_w[k] -= ct * ga
            g_wbar[k] += ct * ga
            gct = -(w - wb) * ga

            g_wbar[k] += cap[k] * v * v * inv_scale
            if free:
                gv = 2.0 * cap[k] * wb * v * inv_scale
                gct += gv / ct_prime(v)
                gwin = gct / w
                g_w[k] -= gct * win / (w * w)
            else:
                gwin = 0.0
            gte += gwin
            ga_k = -gwin if aflag else 0.0

            glow = rho * (low - D) / (D * D) if low > D else 0.0
            glow += (1.0 - s) * gte
            g_sigma[k] = gte * (D - low)
            g_w[k] += c_max * glow
            gT = glow if mflag else 0.0
            ga = ga_k

        # fill branches
        for members in p.groups:
            later = 0.0
            for k in reversed(members):
                g_w[k] -= later
                if case[k] == 0:
                    g_w[k] += g_wbar[k]
                elif case[k] == 1:
                    later += g_wbar[k]

        g_u = [gw * W for gw, W in zip(g_w, self.wcec_of)]
        return f, E, worst, g_sigma, g_u


# ============================================================
# Projected gradient with Barzilai-Borwein steps
# ============================================================
def _project(problem: NlpProblem, x: np.ndarray) -> np.ndarray:
    n = problem.n
    out = np.empty_like(x)
    np.clip(x[:n], 0.0, 1.0, out=out[:n])
    u = x[n:]
    for members in problem.groups:
        idx = np.fromiter(members, dtype=int)
        out[n + idx] = project_simplex(u[idx])
    return out


def _descend(obj: ReducedObjective, x: np.ndarray, rho: float, opts: SolverOptions):
    p = obj.problem
    n = p.n

    def fg(z):
        f, E, worst, gs, gu = obj(z[:n].tolist(), z[n:].tolist(), rho)
        return f, E, worst, np.asarray(gs + gu)

    f, E, worst, g = fg(x)
    step = 1.0
    stall = 0
    it = 0
    converged = False
    for it in range(1, opts.max_iter + 1):
        if np.max(np.abs(_project(p, x - g) - x)) < opts.pg_tol:
            converged = True
            break

        for _ in range(40):
            x_new = _project(p, x - step * g)
            d = x_new - x
            f_new, E_new, worst_new, g_new = fg(x_new)
            if f_new <= f + _ARMIJO * float(g @ d):
                break
            step *= 0.5
        else:
            converged = True
            break

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 1e-18 else step * 2.0
        step = min(max(step, 1e-12), 1e12)

        stall = stall + 1 if f - f_new <= opts.stall_tol * max(1.0, abs(f)) else 0
        x, f, E, worst, g = x_new, f_new, E_new, worst_new, g_new
        if stall >= 20:
            converged = True
            break

    return x, E, worst, it, converged


def _verified_point(obj: ReducedObjective, x: np.ndarray):
    """(energy, te, ŵ, violations) after make_verifiable; energy is inf when the worst-case check fails."""
    n = obj.problem.n
    w_hat = obj.w_hat(x[n:].tolist())
    te, _ = obj.end_times(x[:n].tolist(), w_hat)
    te, w_hat, violations = make_verifiable(obj.problem, te, w_hat)
    if violations:
        return math.inf, te, w_hat, violations
    return evaluate_point(obj.problem, te, w_hat)[4], te, w_hat, violations


def _restore(obj: ReducedObjective, x: np.ndarray, x_safe: np.ndarray) -> np.ndarray:
    """Blend toward the compaction point until the worst-case check passes."""

    def passes(theta):
        return not _verified_point(obj, (1 - theta) * x + theta * x_safe)[3]

    if passes(0.0):
        return x
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return (1 - hi) * x + hi * x_safe


def _run_start(problem: NlpProblem, x0: np.ndarray, x_safe: np.ndarray, opts: SolverOptions):
    obj = ReducedObjective(problem)
    x = _project(problem, x0)
    E0, te0, w0, _ = _verified_point(obj, x)

    iterations = 0
    converged = False
    for rho in opts.penalty_rounds:
        x, E, worst, it, converged = _descend(obj, x, rho, opts)
        iterations += it
        logger.debug(
            "penalty round",
            extra={"rho": rho, "worst": worst, "energy": E, "iterations": it, "converged": converged},
        )
        if worst <= opts.feasibility_tol:
            break
    x = _restore(obj, x, x_safe)

    E, te, w_hat, _ = _verified_point(obj, x)
    if E0 < E:
        # descent plus restoration ended above a feasible start
        E, te, w_hat = E0, te0, w0
    return E, te, w_hat, math.isfinite(E), iterations, converged


def _starting_points(problem: NlpProblem, opts: SolverOptions, te_c, w_c, warm_starts):
    obj = ReducedObjective(problem)
    n = problem.n
    subs = problem.fps.sub_instances
    points = []

    def pack(sigma, w_hat):
        u = [w / W if W > 0 else 0.0 for w, W in zip(w_hat, obj.wcec_of)]
        return np.asarray(list(sigma) + u, dtype=float)

    # (a) budgets proportional to segment length, end times at segment ends
    u_a = [0.0] * n
    for members in problem.groups:
        lengths = [subs[k].seg_end - subs[k].seg_start for k in members]
        total = float(sum(lengths))
        for k, L in zip(members, lengths):
            u_a[k] = L / total
    w_a = obj.w_hat(u_a)
    points.append(pack(obj.sigma_for([s.seg_end for s in subs], w_a), w_a))

    # (b) worst-case compaction at vmax
    points.append(pack(obj.sigma_for(te_c, w_c), w_c))

    # (c) seeded random perturbations
    for start in range(2, opts.starts):
        rng = np.random.default_rng([opts.seed, start])
        u_r = [0.0] * n
        for members in problem.groups:
            draw = rng.dirichlet(np.ones(len(members)))
            for k, val in zip(members, draw):
                u_r[k] = float(val)
        sigma = rng.uniform(0.0, 1.0, n)
        points.append(np.concatenate([sigma, np.asarray(u_r)]))

    for te_w, w_w in warm_starts:
        points.append(pack(obj.sigma_for(te_w, w_w), w_w))

    return points


def solve_acs(
    problem: NlpProblem,
    options: Optional[SolverOptions] = None,
    warm_starts: Sequence[Tuple[Sequence[float], Sequence[float]]] = (),
    policy: str = "acs",
) -> StaticSchedule:
    opts = options or SolverOptions.from_settings()
    problems = opts.validate()
    if problems:
        raise ValueError("; ".join(problems))

    te_c, w_c, witness = worst_case_compaction(problem)
    if not witness:
        points = _starting_points(problem, opts, te_c, w_c, warm_starts)
        x_safe = _project(problem, points[1])
        # every start falls back toward this point, so it must pass the worst-case check
        witness = _verified_point(ReducedObjective(problem), x_safe)[3]
    if witness:
        logger.warning("task set unschedulable at vmax", extra={"witness": witness})
        raise InfeasibleScheduleError(
            "no feasible schedule: the all-WCEC run at vmax misses a deadline", witness
        )

    results = Parallel(n_jobs=opts.n_jobs)(
        delayed(_run_start)(problem, x0, x_safe, opts) for x0 in points
    )

    feasible = [(E, idx) for idx, (E, *_rest) in enumerate(results) if math.isfinite(E)]
    if not feasible:
        raise InfeasibleScheduleError("no start reached a feasible point", [])
    best_E, best_idx = min(feasible)
    _, te, w_hat, _, iterations, converged = results[best_idx]

    schedule = schedule_from_end_times(
        problem, te, w_hat,
        policy=policy,
        status="converged" if converged else "iteration_limit",
        seed=opts.seed,
        starts_run=len(points),
        feasible_starts=len(feasible),
    )
    logger.info(
        "static schedule solved",
        extra={
            "policy": policy,
            "sub_instances": problem.n,
            "objective": schedule.objective,
            "best_start": best_idx,
            "starts": len(points),
            "feasible_starts": len(feasible),
            "iterations": iterations,
            "residual_max": schedule.residual_max,
        },
    )
    return schedule


def solve_wcs(
    fps: FPSchedule,
    taskset: TaskSet,
    model: PowerModel,
    options: Optional[SolverOptions] = None,
) -> StaticSchedule:
    return solve_acs(build_nlp(fps, taskset, model).worst_case(), options, policy="wcs")


# ============================================================
# Worst-case verification
# ============================================================
@dataclass(frozen=True)
class WorstCaseReport:
    feasible: bool
    energy: float
    violations: Tuple[str, ...] = ()


def verify_worst_case(
    schedule: StaticSchedule,
    fps: FPSchedule,
    taskset: TaskSet,
    model: PowerModel,
) -> WorstCaseReport:
    problem = build_nlp(fps, taskset, model)
    rows = schedule.by_key()
    missing = [s.key for s in fps if s.key not in rows]
    if missing:
        return WorstCaseReport(False, math.nan, tuple(f"no entry for {k}" for k in missing))

    te = [rows[s.key].te for s in fps]
    w_hat = [rows[s.key].w_hat for s in fps]
    E, violations = _worst_case_run(problem, te, w_hat)
    return WorstCaseReport(not violations, E, tuple(violations))
