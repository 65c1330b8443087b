import time

import pytest

from conftest import GOLDEN
from modules.errors import SubInstanceCapError, SubInstanceLookupError
from modules.fps import build_fps, count_sub_instances, describe_fps, predecessor
from modules.taskmodel import build_taskset


def _keys(fps):
    return [s.key for s in fps]


def test_preemptive_order_matches_golden(system_346):
    fps = build_fps(system_346)

    expected = (GOLDEN / "fps_346.txt").read_text(encoding="utf-8").splitlines()
    assert describe_fps(fps) == expected
    assert len(fps) == 16


def test_small_expansion_under_a_millisecond(system_346):
    best = min(_timed(build_fps, system_346) for _ in range(5))
    assert best < 1e-3


def _timed(fn, *args):
    started = time.perf_counter()
    fn(*args)
    return time.perf_counter() - started


def test_first_release_of_third_instance_follows_last_piece(system_346):
    keys = _keys(build_fps(system_346))
    assert keys.index((1, 3, 1)) == keys.index((3, 1, 3)) + 1


def test_two_task_split(two_task):
    assert _keys(build_fps(two_task)) == [(1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 1, 2)]


def test_single_task_never_splits(inverse_model):
    ts = build_taskset([{"period": 7, "wcec": 1, "bcec": 0}], power_model=inverse_model)
    fps = build_fps(ts)
    assert all(s.k == 1 for s in fps)


def test_predecessor(system_346):
    fps = build_fps(system_346)
    assert predecessor(fps, fps.get((2, 1, 2))).key == (1, 2, 1)
    assert predecessor(fps, fps.get((3, 1, 3))).key == (2, 2, 1)
    assert predecessor(fps, fps.get((1, 1, 1))) is None


def test_unknown_sub_instance(system_346):
    fps = build_fps(system_346)
    with pytest.raises(SubInstanceLookupError):
        fps.get((9, 9, 9))


def test_instance_pieces_tile_the_window(system_346):
    fps = build_fps(system_346)
    for (i, j), subs in fps.by_instance.items():
        assert subs[0].seg_start == subs[0].release
        assert subs[-1].seg_end == subs[-1].deadline
        for a, b in zip(subs, subs[1:]):
            assert a.seg_end == b.seg_start
        assert fps.is_last(subs[-1])


def test_cap_exceeded(system_346):
    assert count_sub_instances(system_346) == 16
    with pytest.raises(SubInstanceCapError) as info:
        build_fps(system_346, max_sub_instances=10)
    assert info.value.cap == 10


def test_one_shot_has_no_preemption(motivational):
    fps = build_fps(motivational)
    assert _keys(fps) == [(1, 1, 1), (2, 1, 1), (3, 1, 1)]
