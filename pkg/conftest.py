# conftest.py
from __future__ import annotations

from pathlib import Path

import pytest

from modules.fps import build_fps
from modules.optimizer import SolverOptions
from modules.power import PowerModel, PowerVariant
from modules.taskmodel import ReleaseMode, build_taskset

ROOT = Path(__file__).resolve().parent
GOLDEN = ROOT / "tests" / "golden"


@pytest.fixture
def inverse_model() -> PowerModel:
    return PowerModel(PowerVariant.INVERSE_LAW, lam=1.0, vth=0.0, vmin=0.7, vmax=5.0)


@pytest.fixture
def alpha_model() -> PowerModel:
    return PowerModel(PowerVariant.ALPHA_LAW, lam=1.0, vth=0.7, alpha=2.0, vmin=1.0, vmax=5.0)


@pytest.fixture
def motivational(inverse_model):
    """Three equal tasks released at 0 with deadlines 10, 15, 20."""
    rows = [{"period": d, "wcec": 20, "acec": 10, "bcec": 0} for d in (10, 15, 20)]
    return build_taskset(rows, name="motivational", mode=ReleaseMode.ONE_SHOT, power_model=inverse_model)


@pytest.fixture
def system_346(inverse_model):
    rows = [{"period": p, "wcec": 4, "bcec_ratio": 0.5} for p in (3, 4, 6)]
    return build_taskset(rows, name="preemptive_346", power_model=inverse_model)


@pytest.fixture
def two_task(inverse_model):
    rows = [
        {"period": 2, "wcec": 2, "acec": 1, "bcec": 0},
        {"period": 4, "wcec": 4, "acec": 2, "bcec": 0},
    ]
    return build_taskset(rows, name="two_task", power_model=inverse_model)


@pytest.fixture
def motivational_fps(motivational):
    return build_fps(motivational)


@pytest.fixture
def options() -> SolverOptions:
    return SolverOptions(starts=8, max_iter=400, seed=0)
