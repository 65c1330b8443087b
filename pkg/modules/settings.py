# modules/settings.py
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
DEFAULTS_FILE = CONFIG_DIR / "defaults.json"


@dataclass(frozen=True)
class Settings:
    power_model: Dict[str, Any]
    solver: Dict[str, Any]
    generation: Dict[str, Any]
    simulation: Dict[str, Any]
    output_dir: Path
    log_level: str = "INFO"
    log_format: str = "json"
    source: str = field(default="defaults", compare=False)


def _load_defaults(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


@lru_cache(maxsize=None)
def get_settings(config_path: Optional[str] = None) -> Settings:
    """
    Priority:
    1. explicit flags (applied by callers on top of what this returns)
    2. environment variables ACS_OUTPUT_DIR / ACS_LOG_LEVEL / ACS_LOG_FORMAT
    3. config/defaults.json (or ACS_CONFIG / config_path)
    """
    path = Path(config_path or os.getenv("ACS_CONFIG") or DEFAULTS_FILE)
    raw = _load_defaults(path)

    return Settings(
        power_model=dict(raw["power_model"]),
        solver=dict(raw["solver"]),
        generation=dict(raw["generation"]),
        simulation=dict(raw["simulation"]),
        output_dir=Path(os.getenv("ACS_OUTPUT_DIR") or raw.get("output_dir", "outputs")),
        log_level=os.getenv("ACS_LOG_LEVEL") or raw.get("log_level", "INFO"),
        log_format=os.getenv("ACS_LOG_FORMAT") or raw.get("log_format", "json"),
        source=str(path),
    )
