"""Sweeps over generated task sets. Run with `pytest -m slow`."""
import pytest

from modules.benchgen import GenSpec, generate_taskset
from modules.errors import GenerationError
from modules.experiment import set_stream, solve_policy
from modules.fps import build_fps
from modules.optimizer import SolverOptions
from modules.residuals import constraint_residuals
from modules.simulator import fixed_cycles, run_monte_carlo, run_trial

pytestmark = pytest.mark.slow

SEED = 21
TASK_COUNTS = range(2, 11)
RATIOS = (0.1, 0.5, 0.9)
SETS_PER_CELL = 2
TRIALS = 1000


@pytest.fixture(scope="module")
def solved_sets():
    """(taskset, fps, acs, wcs) for two generated sets per (n, ratio) cell."""
    options = SolverOptions(starts=4, max_iter=300, seed=0)
    out = []
    for n in TASK_COUNTS:
        for ratio in RATIOS:
            made = 0
            for s in range(SETS_PER_CELL + 3):
                if made == SETS_PER_CELL:
                    break
                gen = GenSpec.from_settings(n, ratio, seed=SEED, stream=set_stream(n, ratio, s))
                try:
                    ts = generate_taskset(gen)
                except GenerationError:
                    continue
                fps = build_fps(ts, gen.max_sub_instances)
                wcs, _ = solve_policy(ts, fps, "wcs", options)
                acs, _ = solve_policy(ts, fps, "acs", options, wcs=wcs)
                out.append((ts, fps, acs, wcs))
                made += 1
    assert len(out) >= 50
    return out


def test_solved_schedules_satisfy_every_constraint(solved_sets):
    for ts, fps, acs, wcs in solved_sets:
        model = ts.power_model
        acs_report = constraint_residuals(acs.entries, fps, ts, model)
        wcs_report = constraint_residuals(
            wcs.entries, fps, ts, model, acec={t.index: t.wcec for t in ts.tasks}
        )
        assert acs_report.max_residual <= 1e-6, (ts.name, acs_report.worst)
        assert wcs_report.max_residual <= 1e-6, (ts.name, wcs_report.worst)


def test_no_deadline_misses_in_monte_carlo(solved_sets):
    trials = 0
    for ts, fps, acs, wcs in solved_sets:
        model = ts.power_model
        worst = fixed_cycles(ts, "wcec")
        for schedule in (acs, wcs):
            result = run_monte_carlo(schedule, fps, ts, model, TRIALS, seed=SEED)
            assert result.misses == 0, (ts.name, schedule.policy)
            assert run_trial(schedule, fps, ts, model, worst).misses == 0, (ts.name, schedule.policy)
            trials += result.trials + 1
    assert trials >= 100_000
