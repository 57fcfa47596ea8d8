import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdispatch.core import (
    Flows,
    InvariantError,
    MicrogridConfig,
    MicrogridState,
    TieredTariff,
    TimeSeries,
    seeded_rng,
)


def test_seeded_rng_same_seed_same_stream():
    assert np.array_equal(seeded_rng(42).random(100), seeded_rng(42).random(100))


def test_seeded_rng_different_seeds_differ():
    assert not np.array_equal(seeded_rng(1).random(100), seeded_rng(2).random(100))


def test_seeded_rng_normal_mean():
    m = seeded_rng(7).normal(0.0, 1.0, 100_000).mean()
    assert -0.02 <= m <= 0.02


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_timeseries_rejects_non_finite(bad):
    with pytest.raises(InvariantError):
        TimeSeries(0, 3600, [1.0, bad])


def test_timeseries_rejects_empty_and_bad_resolution():
    with pytest.raises(InvariantError):
        TimeSeries(0, 3600, [])
    with pytest.raises(InvariantError):
        TimeSeries(0, 0, [1.0])


def test_timeseries_with_values_rejects_length_mismatch():
    ts = TimeSeries(0, 300, [1.0, 2.0])
    with pytest.raises(InvariantError):
        ts.with_values([1.0, 2.0, 3.0])


def test_timeseries_values_are_read_only_and_unit_fixed():
    ts = TimeSeries(0, 300, [1.0, 2.0], unit="kWh")
    with pytest.raises(ValueError):
        ts.values[0] = 5.0
    with pytest.raises(AttributeError):
        ts.unit = "kW"


def test_rye_preset_hardware():
    cfg = MicrogridConfig.rye()
    assert cfg.wind_peak_kw == 225.0
    assert cfg.pv_peak_kw == 86.4
    assert cfg.battery_capacity_kwh == 500.0


def test_config_rejects_negative_capacity_and_bad_soc():
    with pytest.raises(InvariantError):
        MicrogridConfig(battery_capacity_kwh=-1.0)
    with pytest.raises(InvariantError):
        MicrogridConfig(initial_soc_fraction=1.5)


def test_tariff_defaults_and_ordering():
    t = TieredTariff()
    assert (t.tier1_limit_kwh_per_day, t.tier1_rate, t.tier2_rate) == (40.0, 0.06905, 0.10652)
    with pytest.raises(InvariantError):
        TieredTariff(tier1_rate=0.2, tier2_rate=0.1)


def _state(**flows):
    return MicrogridState(step_index=1, soc_kwh=5.0, islanded=False, capacity_kwh=10.0,
                          last_flows=Flows(**flows))


def test_state_rejects_simultaneous_charge_and_discharge():
    with pytest.raises(InvariantError):
        _state(load=1.0, grid_import=2.0, battery_charge=2.0, battery_discharge=1.0)


def test_state_rejects_simultaneous_import_and_export():
    with pytest.raises(InvariantError):
        _state(load=1.0, grid_import=2.0, grid_export=1.0)


def test_state_rejects_soc_out_of_bounds():
    with pytest.raises(InvariantError):
        MicrogridState(step_index=0, soc_kwh=10.5, islanded=False, capacity_kwh=10.0)


amounts = st.floats(0.0, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(load=amounts, renew=amounts, charge=amounts, fuel=amounts, gen=amounts)
def test_balanced_state_constructs_and_unbalanced_fails(load, renew, charge, fuel, gen):
    # pick the grid flow that closes the balance exactly
    need = load + charge - renew - fuel - gen
    flows = dict(load=load, renewable_used=renew, battery_charge=charge, fuel_cell=fuel,
                 generator=gen, grid_import=max(need, 0.0), grid_export=max(-need, 0.0))
    s = _state(**flows)
    assert abs(s.last_flows.balance_residual()) <= 1e-9
    flows["curtailed"] = 0.0
    flows["unmet_load"] = 0.0
    flows["load"] = load + 1e-6
    with pytest.raises(InvariantError):
        _state(**flows)
