"""Synthetic town scenarios: regression-based building load, irradiance-driven
solar output and a daily block tariff."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol

import numpy as np

from .core import MicrogridConfig, MicrogridError, Scenario, TieredTariff, TimeSeries


class InsufficientData(MicrogridError, ValueError):
    pass


class NegativeIrradiance(MicrogridError, ValueError):
    pass


MIN_TRAINING_ROWS = 100


def calendar_features(epochs) -> tuple[np.ndarray, np.ndarray]:
    """Hour of day (0-23) and day of year (1-366) for UTC epoch seconds."""
    ep = np.asarray(epochs, dtype=np.int64)
    hour = (ep % 86400) // 3600
    t = ep.astype("datetime64[s]")
    doy = (t.astype("datetime64[D]") - t.astype("datetime64[Y]")).astype(np.int64) + 1
    return hour.astype(float), doy.astype(float)


class LoadRegressor(Protocol):
    def predict(self, temperature, hour, day_of_year) -> np.ndarray: ...


def _design(temperature, hour, day_of_year) -> np.ndarray:
    temp = np.asarray(temperature, dtype=float)
    h = 2 * np.pi * np.asarray(hour, dtype=float) / 24.0
    d = 2 * np.pi * np.asarray(day_of_year, dtype=float) / 365.25
    return np.column_stack([temp, np.sin(h), np.cos(h), np.sin(d), np.cos(d), np.ones_like(temp)])


@dataclass(frozen=True)
class LinearLoadRegressor:
    """Linear model on ``[temperature, sin/cos(hour), sin/cos(day_of_year), 1]``."""

    coef: tuple = (-0.03, -0.25, -0.2, 0.0, 0.15, 1.4)

    @classmethod
    def fit(cls, temperature, hour, day_of_year, load) -> "LinearLoadRegressor":
        X = _design(temperature, hour, day_of_year)
        coef, *_ = np.linalg.lstsq(X, np.asarray(load, dtype=float), rcond=None)
        return cls(tuple(float(c) for c in coef))

    def predict(self, temperature, hour, day_of_year) -> np.ndarray:
        return np.maximum(_design(temperature, hour, day_of_year) @ np.asarray(self.coef), 0.0)

    @property
    def n_features(self) -> int:
        return len(self.coef) - 1


@dataclass(frozen=True)
class FitReport:
    r2_adjusted: float
    rmse: float
    r2_defined: bool = True
    n_test: int = 0


def fit_load_regressor(rows, rng: np.random.Generator | None = None,
                       regressor_cls=LinearLoadRegressor, test_fraction: float = 0.2):
    """Fit on 80% of rows and score on a held-out 20%.

    ``rows`` is an ``(n, 4)`` array of ``(temperature, hour, day_of_year, load_kw)``.
    A constant held-out target has undefined R^2; it is reported as 1.0 with
    ``r2_defined=False``.
    """
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 4:
        raise ValueError("rows must have four columns: temperature, hour, day_of_year, load")
    n = data.shape[0]
    if n < MIN_TRAINING_ROWS:
        raise InsufficientData(f"need at least {MIN_TRAINING_ROWS} rows, got {n}")
    rng = rng if rng is not None else np.random.default_rng(0)
    perm = rng.permutation(n)
    n_test = max(1, int(round(test_fraction * n)))
    test, train = data[perm[:n_test]], data[perm[n_test:]]
    reg = regressor_cls.fit(train[:, 0], train[:, 1], train[:, 2], train[:, 3])

    pred = reg.predict(test[:, 0], test[:, 1], test[:, 2])
    resid = test[:, 3] - pred
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    ss_tot = float(np.sum((test[:, 3] - test[:, 3].mean()) ** 2))
    if ss_tot <= 1e-12 * max(1.0, float(np.sum(test[:, 3] ** 2))):
        return reg, FitReport(1.0, rmse, r2_defined=False, n_test=n_test)
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    p = getattr(reg, "n_features", 5)
    dof = n_test - p - 1
    r2_adj = 1.0 - (1.0 - r2) * (n_test - 1) / dof if dof > 0 else r2
    return reg, FitReport(r2_adj, rmse, True, n_test)


@dataclass(frozen=True)
class SolarPlant:
    panel_area_m2: float
    efficiency: float

    def __post_init__(self):
        if not self.panel_area_m2 > 0:
            raise ValueError("panel area must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")


def solar_energy_kwh(irradiance_w_m2, plant: SolarPlant):
    """Hourly energy = irradiance * area * efficiency / 3600."""
    irr = np.asarray(irradiance_w_m2, dtype=float)
    if np.any(irr < 0):
        raise NegativeIrradiance("irradiance must be non-negative")
    out = irr * plant.panel_area_m2 * plant.efficiency / 3600.0
    return float(out) if out.ndim == 0 else out


def tiered_cost(daily_purchases_kwh, tariff: TieredTariff = TieredTariff()) -> float:
    """Cost of one day's purchases; only the daily total matters."""
    p = np.asarray(daily_purchases_kwh, dtype=float)
    if np.any(p < 0):
        raise ValueError("purchases must be non-negative")
    return tariff.cost(float(p.sum()))


def building_multipliers(rng: np.random.Generator, n: int, sigma: float = 0.2) -> np.ndarray:
    return rng.normal(1.0, sigma, size=n)


def synth_building_load(reg: LoadRegressor, weather: TimeSeries, rng: np.random.Generator,
                        scale: float = 1.5, mult_sigma: float = 0.2, add_sigma: float = 0.1) -> TimeSeries:
    """``max(0, prediction * scale * m + e)`` with one ``m`` per building and ``e`` per step.

    ``weather`` is the temperature series in degC.
    """
    hour, doy = calendar_features(weather.epochs)
    pred = reg.predict(weather.values, hour, doy)
    m = rng.normal(1.0, mult_sigma) if mult_sigma > 0 else 1.0
    e = rng.normal(0.0, add_sigma, size=pred.size) if add_sigma > 0 else 0.0
    out = np.maximum(pred * scale * m + e, 0.0)
    return TimeSeries(weather.start_epoch, weather.resolution, out, "kW")


def synth_town_load(reg: LoadRegressor, weather: TimeSeries, rng: np.random.Generator,
                    n_buildings: int = 30, **kwargs) -> TimeSeries:
    total = np.zeros(len(weather))
    for _ in range(n_buildings):
        total += synth_building_load(reg, weather, rng, **kwargs).values
    return TimeSeries(weather.start_epoch, weather.resolution, total, "kW")


def synthetic_weather(start_epoch: int, steps: int, resolution: int, rng: np.random.Generator,
                      peak_irradiance: float = 900.0, mean_temp: float = 5.0,
                      temp_swing: float = 15.0) -> dict[str, TimeSeries]:
    """Seasonal plus diurnal irradiance (W/m2) and temperature (degC).

    Irradiance follows a clear-sky half-sine between 06:00 and 18:00 scaled
    by a summer-peaking annual factor and a random cloud factor per day.
    """
    ep = start_epoch + resolution * np.arange(steps, dtype=np.int64)
    hour_f = (ep % 86400) / 3600.0
    _, doy = calendar_features(ep)
    season = 0.5 * (1 - np.cos(2 * np.pi * (doy - 1) / 365.25))  # 0 in Jan, 1 mid-year
    daylight = np.clip(np.sin(np.pi * (hour_f - 6.0) / 12.0), 0.0, None)
    day_idx = (ep - ep[0]) // 86400
    clouds = 0.6 + 0.4 * rng.random(int(day_idx.max()) + 1)
    irr = peak_irradiance * (0.3 + 0.7 * season) * daylight * clouds[day_idx]
    temp = (mean_temp + temp_swing * (season - 0.5) * 2
            + 4.0 * np.sin(2 * np.pi * (hour_f - 9.0) / 24.0)
            + rng.normal(0.0, 1.0, steps))
    return {
        "irradiance": TimeSeries(start_epoch, resolution, irr, "W/m2"),
        "temperature": TimeSeries(start_epoch, resolution, temp, "degC"),
    }


def reference_training_rows(rng: np.random.Generator, n: int = 2000,
                            reg: LoadRegressor | None = None, noise: float = 0.1) -> np.ndarray:
    """Labelled ``(temperature, hour, day_of_year, load)`` rows for a reference building."""
    reg = reg or LinearLoadRegressor()
    hour = rng.integers(0, 24, n).astype(float)
    doy = rng.integers(1, 366, n).astype(float)
    temp = 5.0 - 15.0 * np.cos(2 * np.pi * doy / 365.25) + rng.normal(0, 3.0, n)
    load = np.maximum(reg.predict(temp, hour, doy) + rng.normal(0, noise, n), 0.0)
    return np.column_stack([temp, hour, doy, load])


@dataclass(frozen=True)
class SynthParams:
    plant: SolarPlant = SolarPlant(panel_area_m2=3500.0, efficiency=0.2)
    n_buildings: int = 30
    scale: float = 1.5
    mult_sigma: float = 0.2
    add_sigma: float = 0.1
    tariff: TieredTariff = field(default_factory=TieredTariff)


def generate_scenario(config: MicrogridConfig, weather: Mapping[str, TimeSeries],
                      rng: np.random.Generator, params: SynthParams = SynthParams(),
                      regressor: LoadRegressor | None = None, name: str = "synthetic") -> Scenario:
    """Town load, solar output and tariff from ``temperature`` and ``irradiance`` series.

    Solar power in kW equals the hourly energy from :func:`solar_energy_kwh`.
    """
    for key in ("temperature", "irradiance"):
        if key not in weather:
            raise KeyError(f"weather needs a {key!r} series")
    temp, irr = weather["temperature"], weather["irradiance"]
    if not temp.same_clock(irr):
        raise ValueError("weather series are not aligned")
    reg = regressor or LinearLoadRegressor()
    load = synth_town_load(reg, temp, rng, params.n_buildings, scale=params.scale,
                           mult_sigma=params.mult_sigma, add_sigma=params.add_sigma)
    solar = TimeSeries(irr.start_epoch, irr.resolution, solar_energy_kwh(irr.values, params.plant), "kW")
    return Scenario(config=config, load=load, solar=solar, price=params.tariff,
                    weather=dict(weather), name=name)


def toy_scenario(steps: int = 48, start_epoch: int = 1_704_067_200, load_kw: float = 30.0,
                 solar_peak_kw: float = 60.0, battery_kwh: float = 100.0,
                 tariff: TieredTariff | None = None) -> Scenario:
    """Small hourly scenario: half-sine daytime solar, constant load, block tariff."""
    ep = start_epoch + 3600 * np.arange(steps)
    hour = (ep % 86400) / 3600.0
    solar = solar_peak_kw * np.clip(np.sin(np.pi * (hour - 6.0) / 12.0), 0.0, None)
    cfg = MicrogridConfig(battery_capacity_kwh=battery_kwh, battery_max_charge_kw=battery_kwh / 4,
                          battery_max_discharge_kw=battery_kwh / 4, pv_peak_kw=solar_peak_kw,
                          step_seconds=3600)
    return Scenario(
        config=cfg,
        load=TimeSeries(start_epoch, 3600, np.full(steps, load_kw), "kW"),
        solar=TimeSeries(start_epoch, 3600, solar, "kW"),
        price=tariff or TieredTariff(),
        name="toy",
    )
