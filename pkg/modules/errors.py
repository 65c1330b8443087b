# modules/errors.py
from __future__ import annotations

from typing import List, Optional


class AcsError(Exception):
    """Base class for every failure raised by the scheduling toolkit."""


class HyperPeriodError(AcsError, ValueError):
    pass


class PowerDomainError(AcsError, ValueError):
    pass


class SubInstanceCapError(AcsError, ValueError):
    def __init__(self, count: int, cap: int):
        super().__init__(
            f"fully preemptive schedule has {count} sub-instances, cap is {cap}"
        )
        self.count = count
        self.cap = cap


class SubInstanceLookupError(AcsError, LookupError):
    pass


class FillError(AcsError, ValueError):
    pass


class InfeasibleScheduleError(AcsError, RuntimeError):
    """
    No feasible static schedule exists (or none was found).
    `witness` lists the deadline violations of the all-WCEC run at V_max.
    """

    def __init__(self, message: str, witness: Optional[List[str]] = None):
        super().__init__(message)
        self.witness = list(witness or [])


class GenerationError(AcsError, RuntimeError):
    pass


class TaskSetFormatError(AcsError, ValueError):
    def __init__(self, message: str, field_path: str = ""):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class ScheduleMismatchError(AcsError, ValueError):
    pass
