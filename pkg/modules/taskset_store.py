# modules/taskset_store.py
"""
Task-set files (JSON). The schema is strict: unknown fields are rejected and
errors carry the path of the offending field, e.g. "tasks[0].period".
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from modules import __version__
from modules.errors import PowerDomainError, TaskSetFormatError
from modules.power import PowerModel
from modules.taskmodel import ReleaseMode, TaskSet, build_taskset, validate_taskset


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PowerModelDoc(_Strict):
    variant: Literal["alpha_law", "inverse_law"] = "alpha_law"
    lambda_: float = Field(1.0, alias="lambda", gt=0)
    vth: float = 0.7
    alpha: float = 2.0
    vmin: float
    vmax: float


class TaskDoc(_Strict):
    period: int = Field(gt=0)
    wcec: int = Field(gt=0)
    bcec: Optional[float] = Field(None, ge=0)
    bcec_ratio: Optional[float] = Field(None, gt=0, le=1)
    acec: Optional[float] = Field(None, ge=0)
    capacitance: float = Field(1.0, gt=0)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _one_bcec(self):
        if self.bcec is None and self.bcec_ratio is None:
            raise ValueError("one of bcec or bcec_ratio is required")
        if self.bcec is not None and self.bcec_ratio is not None:
            raise ValueError("give bcec or bcec_ratio, not both")
        return self


class TaskSetDoc(_Strict):
    name: str
    mode: Literal["periodic", "one_shot"] = "periodic"
    power_model: PowerModelDoc
    tasks: List[TaskDoc] = Field(min_length=1)
    meta: Optional[Dict[str, Any]] = None


def _field_path(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out


def parse_taskset(data: Any) -> TaskSet:
    try:
        doc = TaskSetDoc.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise TaskSetFormatError(first["msg"], _field_path(first["loc"])) from exc

    pm = doc.power_model
    try:
        model = PowerModel(pm.variant, pm.lambda_, pm.vth, pm.alpha, pm.vmin, pm.vmax)
    except PowerDomainError as exc:
        raise TaskSetFormatError(str(exc), "power_model") from exc

    rows = [t.model_dump(exclude_none=True) for t in doc.tasks]
    ts = build_taskset(rows, name=doc.name, mode=ReleaseMode(doc.mode), power_model=model)
    problems = validate_taskset(ts)
    if problems:
        raise TaskSetFormatError("; ".join(problems), "tasks")
    return ts


def taskset_to_dict(ts: TaskSet) -> Dict[str, Any]:
    return {
        "name": ts.name,
        "mode": ts.mode.value,
        "power_model": ts.power_model.to_dict(),
        "tasks": [
            {
                "period": t.period,
                "wcec": t.wcec,
                "bcec": t.bcec,
                "acec": t.acec,
                "capacitance": t.capacitance,
                "name": t.name,
            }
            for t in ts.tasks
        ],
    }


def taskset_hash(ts: TaskSet) -> str:
    canonical = json.dumps(taskset_to_dict(ts), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_taskset(path: str | Path) -> TaskSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TaskSetFormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(path)) from exc
    return parse_taskset(data)


def save_taskset(ts: TaskSet, path: str | Path, seed: Optional[int] = None, extra_meta: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = taskset_to_dict(ts)
    meta = {"tool_version": __version__, "seed": seed, "input_hash": taskset_hash(ts)}
    meta.update(extra_meta or {})
    doc["meta"] = meta
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path
