import logging

import numpy as np
import pytest

from modules.benchgen import GenSpec, _count_from_periods, _draw_periods, generate_taskset
from modules.errors import GenerationError
from modules.fps import count_sub_instances
from modules.taskmodel import build_taskset, utilization_at


def _gen(n=5, ratio=0.5, **kw):
    return GenSpec.from_settings(n, ratio, seed=11, **kw)


def test_utilization_hits_target():
    gen = _gen()
    for stream in range(5):
        ts = generate_taskset(GenSpec.from_settings(5, 0.5, seed=11, stream=stream))
        u = utilization_at(ts, gen.power_model, gen.power_model.vmax)
        assert 0.69 <= u <= 0.71


def test_bcec_follows_ratio():
    ts = generate_taskset(_gen(ratio=0.9))
    for t in ts.tasks:
        assert t.bcec == pytest.approx(0.9 * t.wcec)
        assert t.acec == pytest.approx((t.bcec + t.wcec) / 2)


def test_periods_in_range_and_expansion_capped():
    gen = _gen(n=10)
    ts = generate_taskset(gen)
    assert all(gen.period_min <= t.period <= gen.period_max for t in ts.tasks)
    assert count_sub_instances(ts) <= gen.max_sub_instances
    assert len(ts.tasks) == 10


def test_period_draw_never_dead_ends():
    gen = _gen(n=10)
    for seed in range(10):
        periods = _draw_periods(gen, np.random.default_rng(seed))
        assert len(periods) == 10
        assert _count_from_periods(periods, gen.max_sub_instances) is not None


@pytest.mark.slow
def test_ten_task_sets_generate_for_most_streams():
    made = 0
    for stream in range(10):
        try:
            generate_taskset(GenSpec.from_settings(10, 0.5, seed=11, stream=stream))
            made += 1
        except GenerationError:
            pass
    assert made >= 9


def test_same_seed_same_set():
    assert generate_taskset(_gen()) == generate_taskset(_gen())
    assert generate_taskset(_gen(stream=1)) != generate_taskset(_gen(stream=2))


@pytest.mark.parametrize("ratio", [0.0, 1.5, -0.1])
def test_invalid_ratio(ratio):
    with pytest.raises(ValueError, match="ratio"):
        generate_taskset(_gen(ratio=ratio))


def test_unreachable_utilization_gives_up():
    with pytest.raises(GenerationError, match="gave up"):
        generate_taskset(_gen(n=1, period_min=1, period_max=1, max_retries=3))


def test_rejected_draws_are_logged(caplog):
    caplog.set_level(logging.DEBUG, logger="modules.benchgen")
    with pytest.raises(GenerationError):
        generate_taskset(_gen(n=1, period_min=1, period_max=1, max_retries=3))
    retries = [r for r in caplog.records if r.name == "modules.benchgen" and "misses target" in r.getMessage()]
    assert len(retries) == 2


def test_count_from_periods_matches_expansion(inverse_model):
    rows = [{"period": p, "wcec": 4, "bcec": 0} for p in (3, 4, 6)]
    ts = build_taskset(rows, name="x", power_model=inverse_model)
    assert _count_from_periods([3, 4, 6], 1000) == count_sub_instances(ts) == 16
    assert _count_from_periods([3, 4, 6], 15) is None
