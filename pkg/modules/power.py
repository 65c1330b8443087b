# modules/power.py
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, NamedTuple

import numpy as np
from scipy.optimize import brentq

from modules.errors import PowerDomainError
from modules.settings import get_settings

# relative slack when deciding whether a window is long enough at V_max
FEASIBILITY_RTOL = 1e-9
_RANGE_RTOL = 1e-12
MONOTONICITY_GRID = 1000


class PowerVariant(str, Enum):
    ALPHA_LAW = "alpha_law"
    INVERSE_LAW = "inverse_law"


# -------------------------------------------------------------
# Dataclass - one processor voltage/frequency model
# -------------------------------------------------------------
@dataclass(frozen=True)
class PowerModel:
    variant: PowerVariant = PowerVariant.ALPHA_LAW
    lam: float = 1.0
    vth: float = 0.7
    alpha: float = 2.0
    vmin: float = 1.0
    vmax: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "variant", PowerVariant(self.variant))
        problems = validate_power_model(self)
        if problems:
            raise PowerDomainError("; ".join(problems))

    @property
    def effective_vth(self) -> float:
        # the inverse law has no threshold term
        return 0.0 if self.variant is PowerVariant.INVERSE_LAW else self.vth

    @property
    def ct_at_vmax(self) -> float:
        return self.ct(self.vmax)

    @property
    def ct_at_vmin(self) -> float:
        return self.ct(self.vmin)

    def ct(self, v: float) -> float:
        """Cycle time at voltage v, no range check."""
        if self.variant is PowerVariant.INVERSE_LAW:
            return self.lam / v
        return self.lam * v / (v - self.vth) ** self.alpha

    def ct_prime(self, v: float) -> float:
        """d CT / d v."""
        if self.variant is PowerVariant.INVERSE_LAW:
            return -self.lam / (v * v)
        x = v - self.vth
        return self.lam * (x - self.alpha * v) / x ** (self.alpha + 1.0)

    def voltage_at_cycle_time(self, c: float) -> float:
        """
        Inverse of ct() for CT(vmax) <= c <= CT(vmin).
        Closed form for the inverse law and alpha == 2, bracketing root otherwise.
        """
        if self.variant is PowerVariant.INVERSE_LAW:
            return self.lam / c
        if self.alpha == 2.0:
            b = 2.0 * c * self.vth + self.lam
            disc = self.lam * self.lam + 4.0 * c * self.vth * self.lam
            return (b + math.sqrt(disc)) / (2.0 * c)
        return brentq(
            lambda v: self.ct(v) - c,
            self.vmin,
            self.vmax,
            xtol=1e-14,
            rtol=1e-14,
            maxiter=200,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "lambda": self.lam,
            "vth": self.vth,
            "alpha": self.alpha,
            "vmin": self.vmin,
            "vmax": self.vmax,
        }


class VoltageChoice(NamedTuple):
    voltage: float
    feasible: bool
    surplus: bool


# -------------------------------------------------------------
# Construction / validation
# -------------------------------------------------------------
def validate_power_model(model: PowerModel) -> List[str]:
    errors: List[str] = []

    if model.lam <= 0:
        errors.append("lambda must be positive")
    if not (model.effective_vth < model.vmin < model.vmax):
        errors.append(
            f"voltages must satisfy vth < vmin < vmax "
            f"(got {model.effective_vth}, {model.vmin}, {model.vmax})"
        )
        return errors

    if model.variant is PowerVariant.ALPHA_LAW:
        if not (1.0 <= model.alpha <= 2.0):
            errors.append(f"alpha must lie in [1, 2] (got {model.alpha})")
        grid = np.linspace(model.vmin, model.vmax, MONOTONICITY_GRID)
        ct = model.lam * grid / (grid - model.vth) ** model.alpha
        if not np.all(np.diff(ct) < 0):
            errors.append("cycle time is not strictly decreasing on [vmin, vmax]")

    return errors


def power_model_from_dict(d: Dict[str, Any]) -> PowerModel:
    return PowerModel(
        variant=PowerVariant(d.get("variant", "alpha_law")),
        lam=float(d.get("lambda", d.get("lam", 1.0))),
        vth=float(d.get("vth", 0.7)),
        alpha=float(d.get("alpha", 2.0)),
        vmin=float(d["vmin"]),
        vmax=float(d["vmax"]),
    )


def default_power_model() -> PowerModel:
    return power_model_from_dict(get_settings().power_model)


# -------------------------------------------------------------
# Timing / energy
# -------------------------------------------------------------
def _check_voltage(model: PowerModel, v: float) -> None:
    lo = model.vmin * (1 - _RANGE_RTOL)
    hi = model.vmax * (1 + _RANGE_RTOL)
    if not (lo <= v <= hi):
        raise PowerDomainError(
            f"voltage {v} outside [{model.vmin}, {model.vmax}]"
        )


def cycle_time(model: PowerModel, v: float) -> float:
    _check_voltage(model, v)
    return model.ct(v)


def exec_time(model: PowerModel, w: float, v: float) -> float:
    if w < 0:
        raise PowerDomainError(f"negative workload {w}")
    return w * cycle_time(model, v)


def energy(capacitance: float, w: float, v: float) -> float:
    return capacitance * w * v * v


def voltage_for_duration(model: PowerModel, w: float, d: float) -> VoltageChoice:
    """
    Smallest voltage in [vmin, vmax] that runs w cycles within d.
    Returns vmin with surplus=True when even vmin is fast enough, and
    vmax with feasible=False when vmax is too slow.
    """
    if w <= 0 or d <= 0:
        raise PowerDomainError(f"workload and duration must be positive (w={w}, d={d})")

    c = d / w
    if c >= model.ct_at_vmin:
        return VoltageChoice(model.vmin, True, True)

    ct_fast = model.ct_at_vmax
    if c < ct_fast * (1 - FEASIBILITY_RTOL):
        return VoltageChoice(model.vmax, False, False)
    if c <= ct_fast:
        return VoltageChoice(model.vmax, True, False)

    v = model.voltage_at_cycle_time(c)
    return VoltageChoice(min(max(v, model.vmin), model.vmax), True, False)
