"""Domain types shared by every module.

Canonical units: power in kW, energy in kWh, money in CAD, time in UNIX
seconds (naive UTC). Per-step energy is ``power * step_seconds / 3600``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

import numpy as np

UNITS = ("kW", "kWh", "CAD/kWh", "degC", "W/m2", "1")

BALANCE_TOL = 1e-9


class MicrogridError(Exception):
    """Base class for all package errors."""


class InvariantError(MicrogridError, ValueError):
    pass


class EmptyTrace(MicrogridError, ValueError):
    pass


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic PCG64 generator; identical seeds give identical streams."""
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def step_hours(step_seconds: float) -> float:
    return step_seconds / 3600.0


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled signal. ``values`` is stored read-only."""

    start_epoch: int
    resolution: int
    values: np.ndarray
    unit: str = "kW"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size < 1:
            raise InvariantError("TimeSeries needs at least one value")
        if self.resolution <= 0:
            raise InvariantError(f"resolution must be positive, got {self.resolution}")
        if not np.all(np.isfinite(vals)):
            raise InvariantError("TimeSeries values must be finite")
        if self.unit not in UNITS:
            raise InvariantError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start_epoch", int(self.start_epoch))
        object.__setattr__(self, "resolution", int(self.resolution))

    def __len__(self) -> int:
        return self.values.size

    @property
    def epochs(self) -> np.ndarray:
        return self.start_epoch + self.resolution * np.arange(len(self), dtype=np.int64)

    @property
    def end_epoch(self) -> int:
        """Epoch of the last sample."""
        return self.start_epoch + self.resolution * (len(self) - 1)

    def with_values(self, values) -> "TimeSeries":
        vals = np.asarray(values, dtype=float)
        if vals.shape != self.values.shape:
            raise InvariantError(
                f"length mismatch: {vals.shape[0] if vals.ndim else 0} vs {len(self)}"
            )
        return TimeSeries(self.start_epoch, self.resolution, vals, self.unit)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        vals = self.values[start:stop]
        return TimeSeries(self.start_epoch + start * self.resolution, self.resolution, vals, self.unit)

    def same_clock(self, other: "TimeSeries") -> bool:
        return (self.start_epoch == other.start_epoch and self.resolution == other.resolution
                and len(self) == len(other))


@dataclass(frozen=True)
class MicrogridConfig:
    battery_capacity_kwh: float = 500.0
    battery_max_charge_kw: float = 100.0
    battery_max_discharge_kw: float = 100.0
    pv_peak_kw: float = 86.4
    wind_peak_kw: float = 0.0
    fuel_cell_max_kw: float = 0.0
    generator_max_kw: float = 0.0
    initial_soc_fraction: float = 0.5
    step_seconds: int = 3600

    def __post_init__(self):
        for name in ("battery_capacity_kwh", "battery_max_charge_kw", "battery_max_discharge_kw",
                     "pv_peak_kw", "wind_peak_kw", "fuel_cell_max_kw", "generator_max_kw"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvariantError(f"{name} must be finite and >= 0, got {v}")
        if not 0.0 <= self.initial_soc_fraction <= 1.0:
            raise InvariantError("initial_soc_fraction must lie in [0, 1]")
        if self.step_seconds <= 0:
            raise InvariantError("step_seconds must be positive")

    @property
    def generation_capacity_kw(self) -> float:
        return self.pv_peak_kw + self.wind_peak_kw + self.fuel_cell_max_kw + self.generator_max_kw

    @property
    def dt_hours(self) -> float:
        return step_hours(self.step_seconds)

    @property
    def initial_soc_kwh(self) -> float:
        return self.initial_soc_fraction * self.battery_capacity_kwh

    @classmethod
    def rye(cls, **overrides) -> "MicrogridConfig":
        """Norwegian farm microgrid: 225 kW wind, 86.4 kWp PV, 500 kWh storage."""
        base = dict(battery_capacity_kwh=500.0, battery_max_charge_kw=100.0,
                    battery_max_discharge_kw=100.0, pv_peak_kw=86.4, wind_peak_kw=225.0)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def lac_megantic(cls, **overrides) -> "MicrogridConfig":
        base = dict(battery_capacity_kwh=700.0, battery_max_charge_kw=175.0,
                    battery_max_discharge_kw=175.0, pv_peak_kw=800.0, wind_peak_kw=0.0)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def mesa(cls, **overrides) -> "MicrogridConfig":
        base = dict(battery_capacity_kwh=500.0, battery_max_charge_kw=250.0,
                    battery_max_discharge_kw=250.0, pv_peak_kw=90.0, wind_peak_kw=50.0,
                    fuel_cell_max_kw=80.0, generator_max_kw=240.0, step_seconds=300)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class TieredTariff:
    """Daily block tariff: the first ``tier1_limit_kwh_per_day`` kWh at tier 1."""

    tier1_limit_kwh_per_day: float = 40.0
    tier1_rate: float = 0.06905
    tier2_rate: float = 0.10652

    def __post_init__(self):
        if not self.tier1_limit_kwh_per_day > 0:
            raise InvariantError("tier limit must be positive")
        if not self.tier2_rate > self.tier1_rate > 0:
            raise InvariantError("tariff rates must satisfy tier2 > tier1 > 0")

    def cost(self, total_kwh: float) -> float:
        lim = self.tier1_limit_kwh_per_day
        return self.tier1_rate * min(total_kwh, lim) + self.tier2_rate * max(0.0, total_kwh - lim)

    def marginal_cost(self, already_kwh: float, purchase_kwh: float) -> float:
        """Cost of buying ``purchase_kwh`` after ``already_kwh`` were bought today."""
        return self.cost(already_kwh + purchase_kwh) - self.cost(already_kwh)

    def marginal_rate(self, already_kwh: float) -> float:
        return self.tier1_rate if already_kwh < self.tier1_limit_kwh_per_day else self.tier2_rate


Price = Union[TimeSeries, TieredTariff]


@dataclass(frozen=True)
class Scenario:
    """Aligned bundle of input series plus hardware configuration.

    ``load`` is total demand. Continuous environments additionally read
    ``load_parts`` (critical, non_critical, essential) when present; the parts
    must sum to ``load``.
    """

    config: MicrogridConfig
    load: TimeSeries
    solar: TimeSeries
    price: Price
    wind: Optional[TimeSeries] = None
    load_parts: Mapping[str, TimeSeries] = field(default_factory=dict)
    weather: Mapping[str, TimeSeries] = field(default_factory=dict)
    sell_price: Optional[TimeSeries] = None
    name: str = "scenario"

    def __post_init__(self):
        ref = self.load
        if ref.resolution != self.config.step_seconds:
            raise InvariantError(
                f"series resolution {ref.resolution}s differs from config step {self.config.step_seconds}s"
            )
        named = {"solar": self.solar, "wind": self.wind, "sell_price": self.sell_price}
        if isinstance(self.price, TimeSeries):
            named["price"] = self.price
        named.update({f"load_parts.{k}": v for k, v in self.load_parts.items()})
        named.update({f"weather.{k}": v for k, v in self.weather.items()})
        for key, ts in named.items():
            if ts is not None and not ts.same_clock(ref):
                raise InvariantError(f"series {key!r} is not aligned with load")
        if self.load_parts:
            total = sum(p.values for p in self.load_parts.values())
            if not np.allclose(total, ref.values, rtol=1e-9, atol=1e-9):
                raise InvariantError("load_parts must sum to load")

    def __len__(self) -> int:
        return len(self.load)

    @property
    def horizon(self) -> int:
        return len(self.load)

    @property
    def renewable_kw(self) -> np.ndarray:
        r = self.solar.values.copy()
        if self.wind is not None:
            r = r + self.wind.values
        return r

    @property
    def epochs(self) -> np.ndarray:
        return self.load.epochs

    def buy_price_at(self, t: int) -> float:
        if isinstance(self.price, TieredTariff):
            return self.price.tier1_rate
        return float(self.price.values[t])

    def sell_price_at(self, t: int) -> float:
        if self.sell_price is not None:
            return float(self.sell_price.values[t])
        if isinstance(self.price, TieredTariff):
            return self.price.tier1_rate
        return float(self.price.values[t])

    def window(self, start: int, stop: int) -> "Scenario":
        sl = lambda ts: None if ts is None else ts.slice(start, stop)  # noqa: E731
        return replace(
            self,
            load=sl(self.load),
            solar=sl(self.solar),
            wind=sl(self.wind),
            price=self.price if isinstance(self.price, TieredTariff) else sl(self.price),
            sell_price=sl(self.sell_price),
            load_parts={k: sl(v) for k, v in self.load_parts.items()},
            weather={k: sl(v) for k, v in self.weather.items()},
        )


FLOW_FIELDS = (
    "load",
    "renewable_used",
    "battery_charge",
    "battery_discharge",
    "grid_import",
    "grid_export",
    "fuel_cell",
    "generator",
    "unmet_load",
    "curtailed",
)


@dataclass(frozen=True)
class Flows:
    """Energy flows of one step, all in kWh."""

    load: float = 0.0
    renewable_used: float = 0.0
    battery_charge: float = 0.0
    battery_discharge: float = 0.0
    grid_import: float = 0.0
    grid_export: float = 0.0
    fuel_cell: float = 0.0
    generator: float = 0.0
    unmet_load: float = 0.0
    curtailed: float = 0.0

    def balance_residual(self) -> float:
        supply = (self.renewable_used + self.battery_discharge + self.grid_import
                  + self.fuel_cell + self.generator)
        demand = self.load - self.unmet_load + self.battery_charge + self.grid_export
        return supply - demand

    @property
    def total_supplied(self) -> float:
        return (self.renewable_used + self.battery_discharge + self.grid_import
                + self.fuel_cell + self.generator)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in FLOW_FIELDS}


@dataclass(frozen=True)
class MicrogridState:
    """Physical state after a step; validated on construction."""

    step_index: int
    soc_kwh: float
    islanded: bool
    capacity_kwh: float
    last_flows: Flows = field(default_factory=Flows)
    day_import_kwh: float = 0.0
    buy_cost: float = 0.0
    sell_revenue: float = 0.0
    fuel_cell_level: float = 0.0
    generator_level: float = 0.0

    def __post_init__(self):
        f = self.last_flows
        scale = max(1.0, abs(f.load), self.capacity_kwh)
        if not -BALANCE_TOL * scale <= self.soc_kwh <= self.capacity_kwh + BALANCE_TOL * scale:
            raise InvariantError(f"soc {self.soc_kwh} outside [0, {self.capacity_kwh}]")
        if f.battery_charge > 0 and f.battery_discharge > 0:
            raise InvariantError("battery charged and discharged in the same step")
        if f.grid_import > 0 and f.grid_export > 0:
            raise InvariantError("grid import and export in the same step")
        for name in FLOW_FIELDS:
            if getattr(f, name) < -BALANCE_TOL * scale:
                raise InvariantError(f"negative flow {name}={getattr(f, name)}")
        res = f.balance_residual()
        if abs(res) > BALANCE_TOL:
            raise InvariantError(f"energy balance violated by {res:.3e} kWh")

    @property
    def soc_fraction(self) -> float:
        return self.soc_kwh / self.capacity_kwh if self.capacity_kwh > 0 else 0.0
