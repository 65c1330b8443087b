import numpy as np
import pytest

from modules.errors import PowerDomainError
from modules.power import (
    PowerModel,
    PowerVariant,
    cycle_time,
    energy,
    exec_time,
    power_model_from_dict,
    validate_power_model,
    voltage_for_duration,
)


def test_cycle_time_inverse_law(inverse_model):
    assert cycle_time(inverse_model, 2.0) == pytest.approx(0.5)


def test_cycle_time_alpha_law(alpha_model):
    assert cycle_time(alpha_model, 1.7) == pytest.approx(1.7)
    assert alpha_model.ct_at_vmax < alpha_model.ct_at_vmin


def test_cycle_time_out_of_range(inverse_model):
    with pytest.raises(PowerDomainError):
        cycle_time(inverse_model, 5.5)
    with pytest.raises(PowerDomainError):
        cycle_time(inverse_model, 0.5)


def test_exec_time(inverse_model):
    assert exec_time(inverse_model, 20, 2.0) == pytest.approx(10.0)
    assert exec_time(inverse_model, 20, 3.0) == pytest.approx(6.6667, abs=1e-4)
    assert exec_time(inverse_model, 0, 4.0) == 0.0


def test_energy():
    assert energy(1.0, 10, 2.0) == pytest.approx(40.0)
    assert energy(1.0, 0, 2.0) == 0.0
    assert 3 * energy(1.0, 20, 3.0) == pytest.approx(540.0)


def test_voltage_for_duration_examples(inverse_model):
    v, feasible, surplus = voltage_for_duration(inverse_model, 20, 10)
    assert v == pytest.approx(2.0)
    assert feasible and not surplus

    v, feasible, _ = voltage_for_duration(inverse_model, 20, 5)
    assert v == pytest.approx(4.0)
    assert feasible


def test_voltage_for_duration_infeasible_at_low_vmax():
    model = PowerModel(PowerVariant.INVERSE_LAW, lam=1.0, vth=0.0, vmin=0.7, vmax=3.3)
    v, feasible, _ = voltage_for_duration(model, 20, 5)
    assert not feasible
    assert v == pytest.approx(3.3)


def test_voltage_for_duration_surplus(inverse_model):
    v, feasible, surplus = voltage_for_duration(inverse_model, 1, 100)
    assert v == inverse_model.vmin
    assert feasible and surplus


@pytest.mark.parametrize("w, d", [(0, 1.0), (5, 0.0), (-1, 2.0)])
def test_voltage_for_duration_rejects_non_positive(inverse_model, w, d):
    with pytest.raises(PowerDomainError):
        voltage_for_duration(inverse_model, w, d)


@pytest.mark.parametrize(
    "model",
    [
        PowerModel(PowerVariant.INVERSE_LAW, lam=1.0, vth=0.0, vmin=0.7, vmax=5.0),
        PowerModel(PowerVariant.ALPHA_LAW, lam=1.0, vth=0.7, alpha=2.0, vmin=1.0, vmax=5.0),
        PowerModel(PowerVariant.ALPHA_LAW, lam=2.0, vth=0.5, alpha=1.5, vmin=0.9, vmax=4.0),
    ],
)
def test_voltage_inversion_round_trip(model):
    rng = np.random.default_rng(11)
    ws = rng.uniform(1.0, 500.0, 10_000)
    vs = rng.uniform(model.vmin, model.vmax, 10_000)
    for w, v in zip(ws, vs):
        got = voltage_for_duration(model, w, exec_time(model, w, v)).voltage
        assert abs(got - v) <= 1e-9 * v


def test_model_validation():
    with pytest.raises(PowerDomainError):
        PowerModel(PowerVariant.ALPHA_LAW, vth=1.2, vmin=1.0, vmax=5.0)
    with pytest.raises(PowerDomainError):
        PowerModel(PowerVariant.ALPHA_LAW, alpha=2.5)
    with pytest.raises(PowerDomainError):
        PowerModel(PowerVariant.INVERSE_LAW, vth=0.0, vmin=5.0, vmax=1.0)


def test_inverse_law_ignores_threshold():
    model = PowerModel(PowerVariant.INVERSE_LAW, vth=0.7, vmin=0.7, vmax=5.0)
    assert validate_power_model(model) == []
    assert model.ct(2.0) == pytest.approx(0.5)


def test_power_model_from_dict_round_trip(alpha_model):
    assert power_model_from_dict(alpha_model.to_dict()) == alpha_model


def test_ct_prime_matches_difference(alpha_model):
    v, h = 2.3, 1e-6
    numeric = (alpha_model.ct(v + h) - alpha_model.ct(v - h)) / (2 * h)
    assert alpha_model.ct_prime(v) == pytest.approx(numeric, rel=1e-6)
