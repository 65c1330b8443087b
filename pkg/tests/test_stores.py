import json
from dataclasses import replace

import pytest

from conftest import ROOT
from modules.errors import ScheduleMismatchError, TaskSetFormatError
from modules.fps import build_fps
from modules.optimizer import build_nlp, schedule_from_end_times
from modules.schedule_store import check_schedule_matches, load_schedule, save_schedule
from modules.taskset_store import load_taskset, parse_taskset, save_taskset, taskset_hash, taskset_to_dict

MOTIVATIONAL = ROOT / "data" / "motivational.json"


def _doc():
    return json.loads(MOTIVATIONAL.read_text(encoding="utf-8"))


# -----------------------------
# Task sets
# -----------------------------
def test_bundled_motivational_matches_fixture(motivational):
    ts = load_taskset(MOTIVATIONAL)
    assert [(t.period, t.wcec, t.acec, t.bcec) for t in ts.tasks] == [
        (t.period, t.wcec, t.acec, t.bcec) for t in motivational.tasks
    ]
    assert ts.mode == motivational.mode
    assert ts.power_model == motivational.power_model


def test_taskset_file_round_trip(system_346, tmp_path):
    path = save_taskset(system_346, tmp_path / "set.json", seed=3)
    again = load_taskset(path)
    assert taskset_to_dict(again) == taskset_to_dict(system_346)
    assert taskset_hash(again) == taskset_hash(system_346)

    meta = json.loads(path.read_text(encoding="utf-8"))["meta"]
    assert meta["seed"] == 3
    assert meta["input_hash"] == taskset_hash(system_346)


def test_missing_period_names_the_field():
    doc = _doc()
    del doc["tasks"][0]["period"]
    with pytest.raises(TaskSetFormatError) as info:
        parse_taskset(doc)
    assert info.value.field_path == "tasks[0].period"


def test_unknown_field_rejected():
    doc = _doc()
    doc["tasks"][1]["priority"] = 1
    with pytest.raises(TaskSetFormatError) as info:
        parse_taskset(doc)
    assert info.value.field_path == "tasks[1].priority"


def test_bcec_or_ratio_required():
    doc = _doc()
    del doc["tasks"][0]["bcec"]
    with pytest.raises(TaskSetFormatError, match="bcec"):
        parse_taskset(doc)


def test_bad_voltage_range():
    doc = _doc()
    doc["power_model"]["vmin"] = 6.0
    with pytest.raises(TaskSetFormatError) as info:
        parse_taskset(doc)
    assert info.value.field_path == "power_model"


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"name\": ", encoding="utf-8")
    with pytest.raises(TaskSetFormatError, match="invalid JSON"):
        load_taskset(path)


def test_hash_ignores_meta():
    doc = _doc()
    plain = taskset_hash(parse_taskset(doc))
    doc["meta"] = {"seed": 99}
    assert taskset_hash(parse_taskset(doc)) == plain


# -----------------------------
# Schedules
# -----------------------------
@pytest.fixture
def hand_schedule(motivational, motivational_fps):
    p = build_nlp(motivational_fps, motivational, motivational.power_model)
    sched = schedule_from_end_times(p, [10, 15, 20], [20, 20, 20], policy="acs")
    return replace(sched, taskset_hash=taskset_hash(motivational))


def test_schedule_file_round_trip(hand_schedule, tmp_path):
    path = save_schedule(hand_schedule, tmp_path / "s.json")
    assert load_schedule(path) == hand_schedule


def test_schedule_matches_its_taskset(hand_schedule, motivational, motivational_fps):
    check_schedule_matches(hand_schedule, motivational_fps, taskset_hash(motivational))


def test_schedule_for_other_taskset(hand_schedule, system_346):
    with pytest.raises(ScheduleMismatchError):
        check_schedule_matches(hand_schedule, build_fps(system_346), taskset_hash(system_346))


def test_schedule_with_missing_rows(hand_schedule, motivational, motivational_fps):
    short = replace(hand_schedule, entries=hand_schedule.entries[:2])
    with pytest.raises(ScheduleMismatchError, match="sub-instances"):
        check_schedule_matches(short, motivational_fps, taskset_hash(motivational))


def test_corrupt_schedule_file(hand_schedule, tmp_path):
    path = save_schedule(hand_schedule, tmp_path / "s.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["policy"] = "magic"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(TaskSetFormatError):
        load_schedule(path)
