import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdispatch.core import MicrogridConfig, TieredTariff, TimeSeries, seeded_rng
from mgdispatch.synth import (
    InsufficientData,
    LinearLoadRegressor,
    NegativeIrradiance,
    SolarPlant,
    building_multipliers,
    fit_load_regressor,
    generate_scenario,
    solar_energy_kwh,
    synth_building_load,
    synth_town_load,
    synthetic_weather,
    tiered_cost,
)

START = 1_704_067_200


class ConstantRegressor:
    def __init__(self, value):
        self.value = value

    def predict(self, temperature, hour, day_of_year):
        return np.full(np.shape(temperature), float(self.value))


def _temps(n=24):
    return TimeSeries(START, 3600, np.linspace(-5, 20, n), "degC")


def test_tiered_cost_examples():
    assert tiered_cost([0.0]) == 0.0
    assert tiered_cost([40.0]) == pytest.approx(40 * 0.06905, abs=1e-12)
    assert round(tiered_cost([40.0]), 4) == 2.7620
    assert tiered_cost([20.0, 30.0]) == pytest.approx(40 * 0.06905 + 10 * 0.10652, abs=1e-12)
    assert round(tiered_cost([50.0]), 4) == 3.8272


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 200), st.floats(0, 200))
def test_tiered_cost_monotone_and_piecewise(a, b):
    lo, hi = sorted((a, b))
    t = TieredTariff()
    assert tiered_cost([lo]) <= tiered_cost([hi]) + 1e-12
    # slope is tier1 below the limit and tier2 above it
    if hi <= 40 or lo >= 40:
        rate = t.tier1_rate if hi <= 40 else t.tier2_rate
        assert tiered_cost([hi]) - tiered_cost([lo]) == pytest.approx(rate * (hi - lo), abs=1e-9)


def test_tiered_cost_continuous_at_limit():
    eps = 1e-9
    assert abs(tiered_cost([40 + eps]) - tiered_cost([40 - eps])) < 1e-9


def test_solar_energy_examples():
    plant = SolarPlant(2.0, 0.2)
    assert solar_energy_kwh(0.0, plant) == 0.0
    assert solar_energy_kwh(500.0, plant) == pytest.approx(200 / 3600, rel=1e-15)
    assert solar_energy_kwh(3600.0, SolarPlant(1.0, 1.0)) == 1.0
    with pytest.raises(NegativeIrradiance):
        solar_energy_kwh(-1.0, plant)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1200), st.floats(0.1, 1e4), st.floats(0.01, 1.0), st.floats(0.1, 10))
def test_solar_energy_linear_in_each_argument(irr, area, eff, k):
    base = solar_energy_kwh(irr, SolarPlant(area, eff))
    assert solar_energy_kwh(irr * k, SolarPlant(area, eff)) == pytest.approx(base * k, rel=1e-12, abs=1e-15)
    assert solar_energy_kwh(irr, SolarPlant(area * k, eff)) == pytest.approx(base * k, rel=1e-12, abs=1e-15)
    if eff * k <= 1:
        assert solar_energy_kwh(irr, SolarPlant(area, eff * k)) == pytest.approx(base * k, rel=1e-12, abs=1e-15)


def test_building_load_zero_noise_is_scaled_prediction():
    out = synth_building_load(ConstantRegressor(2.0), _temps(), seeded_rng(0), mult_sigma=0, add_sigma=0)
    assert np.array_equal(out.values, np.full(24, 3.0))


def test_building_load_clamped_at_zero():
    out = synth_building_load(ConstantRegressor(0.0), _temps(200), seeded_rng(0), mult_sigma=0, add_sigma=1.0)
    assert out.values.min() == 0.0 and out.values.max() > 0.0


def test_multiplier_moments():
    m = building_multipliers(seeded_rng(3), 10_000)
    assert 0.98 <= m.mean() <= 1.02
    assert 0.19 <= m.std(ddof=1) <= 0.21


def test_building_mean_at_one_timestep():
    rng = seeded_rng(5)
    w = _temps(1)
    draws = np.array([synth_building_load(ConstantRegressor(1.0), w, rng, add_sigma=0.0).values[0]
                      for _ in range(10_000)])
    assert 1.47 <= draws.mean() <= 1.53
    assert 0.19 <= (draws / 1.5).std(ddof=1) <= 0.21


def test_town_load_examples():
    reg, w = ConstantRegressor(2.0), _temps()
    quiet = dict(mult_sigma=0, add_sigma=0)
    assert np.allclose(synth_town_load(reg, w, seeded_rng(0), 30, **quiet).values, 90.0, atol=1e-12)
    assert np.array_equal(synth_town_load(reg, w, seeded_rng(0), 0).values, np.zeros(24))
    one = synth_town_load(reg, w, seeded_rng(9), 1)
    single = synth_building_load(reg, w, seeded_rng(9))
    assert np.array_equal(one.values, single.values)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 10.0), st.integers(0, 40))
def test_zero_noise_town_load_is_linear(pred, n):
    out = synth_town_load(ConstantRegressor(pred), _temps(4), seeded_rng(0), n, mult_sigma=0, add_sigma=0)
    assert np.allclose(out.values, n * 1.5 * pred, rtol=1e-12, atol=1e-12)


def _realizable_rows(n, rng, coef=(0.05, 0.4, -0.3, 0.2, 0.1, 2.0)):
    reg = LinearLoadRegressor(coef)
    temp = rng.uniform(-10, 25, n)
    hour = rng.integers(0, 24, n).astype(float)
    doy = rng.integers(1, 366, n).astype(float)
    return np.column_stack([temp, hour, doy, reg.predict(temp, hour, doy)])


def test_fit_realizable_target():
    rows = _realizable_rows(500, seeded_rng(1))
    _, rep = fit_load_regressor(rows, seeded_rng(2))
    assert rep.r2_adjusted >= 0.99 and rep.rmse < 1e-9 and rep.n_test == 100


def test_fit_constant_target_flags_undefined_r2():
    rows = _realizable_rows(200, seeded_rng(1))
    rows[:, 3] = 3.0
    _, rep = fit_load_regressor(rows)
    assert rep.r2_adjusted == 1.0 and not rep.r2_defined and rep.rmse == pytest.approx(0.0, abs=1e-9)


def test_fit_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_load_regressor(_realizable_rows(10, seeded_rng(0)))


def _weather(steps, rng, irradiance=None):
    w = synthetic_weather(START, steps, 3600, rng)
    if irradiance is not None:
        w["irradiance"] = TimeSeries(START, 3600, irradiance, "W/m2")
    return w


def test_generate_zero_irradiance_gives_zero_solar():
    sc = generate_scenario(MicrogridConfig(), _weather(24, seeded_rng(0), np.zeros(24)), seeded_rng(1))
    assert sc.horizon == 24 and np.all(sc.solar.values == 0.0)


def test_generate_is_deterministic():
    a = generate_scenario(MicrogridConfig(), _weather(48, seeded_rng(0)), seeded_rng(1))
    b = generate_scenario(MicrogridConfig(), _weather(48, seeded_rng(0)), seeded_rng(1))
    assert np.array_equal(a.load.values, b.load.values)
    assert np.array_equal(a.solar.values, b.solar.values)
    assert a.price == b.price


def test_generate_annual_solar_peaks_with_irradiance():
    steps = 8784
    t = np.arange(steps)
    annual = 0.5 * (1 - np.cos(2 * np.pi * t / steps))
    irr = 800.0 * annual
    sc = generate_scenario(MicrogridConfig(), _weather(steps, seeded_rng(0), irr), seeded_rng(1))
    assert int(np.argmax(sc.solar.values)) == int(np.argmax(irr))
