"""Per-step energy settlement shared by all controllers.

Every controller (discrete actions, continuous actions, rule baseline, MILP
schedule) reduces its choice to a :class:`DispatchDecision` which
:func:`settle` turns into balanced :class:`~mgdispatch.core.Flows`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..core import Flows, MicrogridState, Scenario, TieredTariff

SECONDS_PER_DAY = 86400


class EpisodeFinished(RuntimeError):
    pass


@dataclass(frozen=True)
class DispatchDecision:
    """Requested dispatch for one step, energies in kWh.

    surplus: what a grid-connected microgrid does with leftover energy,
        ``"export"`` or ``"curtail"``.
    absorb_surplus: when islanded, push leftover energy into the battery
        before curtailing.
    island_when_idle: report the step as islanded when no grid exchange
        was needed (baselines have no explicit island action).
    """

    charge: float = 0.0
    discharge: float = 0.0
    fuel_cell: float = 0.0
    generator: float = 0.0
    islanded: bool = False
    surplus: str = "export"
    absorb_surplus: bool = False
    island_when_idle: bool = False


class DiscreteAction(IntEnum):
    """Seven legal (battery, grid) combinations."""

    CHARGE_SURPLUS_BUY = 0
    DISCHARGE_BUY = 1
    SELL_SURPLUS_IDLE = 2
    ISLAND_DISCHARGE = 3
    ISLAND_CHARGE = 4
    CHARGE_FROM_GRID = 5
    SELL_PLUS_DISCHARGE = 6

    @property
    def battery_mode(self) -> str:
        return _MODES[self][0]

    @property
    def grid_mode(self) -> str:
        return _MODES[self][1]


_MODES = {
    DiscreteAction.CHARGE_SURPLUS_BUY: ("charge", "buy"),
    DiscreteAction.DISCHARGE_BUY: ("discharge", "buy"),
    DiscreteAction.SELL_SURPLUS_IDLE: ("idle", "sell"),
    DiscreteAction.ISLAND_DISCHARGE: ("discharge", "disconnected"),
    DiscreteAction.ISLAND_CHARGE: ("charge", "disconnected"),
    DiscreteAction.CHARGE_FROM_GRID: ("charge", "buy"),
    DiscreteAction.SELL_PLUS_DISCHARGE: ("discharge", "sell"),
}

N_DISCRETE_ACTIONS = len(DiscreteAction)


@dataclass(frozen=True)
class StepInputs:
    """Exogenous energies (kWh) and battery limits at one step."""

    load: float
    renewable: float
    charge_cap: float
    discharge_cap: float
    fuel_cap: float
    generator_cap: float

    @property
    def surplus(self) -> float:
        return max(0.0, self.renewable - self.load)

    @property
    def deficit(self) -> float:
        return max(0.0, self.load - self.renewable)


def step_inputs(state: MicrogridState, scenario: Scenario) -> StepInputs:
    t = state.step_index
    cfg = scenario.config
    dt = cfg.dt_hours
    load = float(scenario.load.values[t]) * dt
    renewable = float(scenario.solar.values[t]) * dt
    if scenario.wind is not None:
        renewable += float(scenario.wind.values[t]) * dt
    headroom = max(0.0, cfg.battery_capacity_kwh - state.soc_kwh)
    return StepInputs(
        load=load,
        renewable=renewable,
        charge_cap=min(cfg.battery_max_charge_kw * dt, headroom),
        discharge_cap=min(cfg.battery_max_discharge_kw * dt, max(0.0, state.soc_kwh)),
        fuel_cap=cfg.fuel_cell_max_kw * dt,
        generator_cap=cfg.generator_max_kw * dt,
    )


def settle(inp: StepInputs, dec: DispatchDecision) -> tuple[Flows, bool]:
    """Resolve a decision into balanced flows. Returns ``(flows, islanded)``."""
    c = min(max(dec.charge, 0.0), inp.charge_cap)
    d = min(max(dec.discharge, 0.0), inp.discharge_cap)
    if c > 0 and d > 0:
        raise ValueError("decision requests charge and discharge together")
    fuel = min(max(dec.fuel_cell, 0.0), inp.fuel_cap)
    gen = min(max(dec.generator, 0.0), inp.generator_cap)
    ren = inp.renewable
    load = inp.load
    islanded = bool(dec.islanded)

    imp = exp = unmet = cur = 0.0
    supply = ren + fuel + gen + d
    demand = load + c
    if supply >= demand:
        excess = supply - demand
        if not islanded and dec.surplus == "export":
            exp = excess
        else:
            cut = min(excess, d)
            d -= cut
            excess -= cut
            if islanded and dec.absorb_surplus and d == 0.0:
                extra = min(excess, inp.charge_cap - c)
                c += extra
                excess -= extra
            cur = min(excess, ren)
            excess -= cur
            cut = min(excess, gen)
            gen -= cut
            excess -= cut
            fuel -= excess
    else:
        short = demand - supply
        if not islanded:
            imp = short
        else:
            cut = min(short, c)
            c -= cut
            unmet = short - cut

    if dec.island_when_idle and imp == 0.0 and exp == 0.0:
        islanded = True
    flows = Flows(
        load=load,
        renewable_used=ren - cur,
        battery_charge=c,
        battery_discharge=d,
        grid_import=imp,
        grid_export=exp,
        fuel_cell=max(fuel, 0.0),
        generator=gen,
        unmet_load=unmet,
        curtailed=cur,
    )
    return flows, islanded


def discrete_decision(action: int, inp: StepInputs) -> DispatchDecision:
    a = DiscreteAction(int(action))
    S, D = inp.surplus, inp.deficit
    if a is DiscreteAction.CHARGE_SURPLUS_BUY:
        return DispatchDecision(charge=min(S, inp.charge_cap), surplus="curtail")
    if a is DiscreteAction.DISCHARGE_BUY:
        return DispatchDecision(discharge=min(D, inp.discharge_cap), surplus="curtail")
    if a is DiscreteAction.SELL_SURPLUS_IDLE:
        return DispatchDecision(surplus="export")
    if a is DiscreteAction.ISLAND_DISCHARGE:
        return DispatchDecision(discharge=min(D, inp.discharge_cap), islanded=True)
    if a is DiscreteAction.ISLAND_CHARGE:
        return DispatchDecision(charge=min(S, inp.charge_cap), islanded=True)
    if a is DiscreteAction.CHARGE_FROM_GRID:
        return DispatchDecision(charge=inp.charge_cap, surplus="curtail")
    return DispatchDecision(discharge=inp.discharge_cap, surplus="export")


def continuous_decision(action, inp: StepInputs, cfg) -> DispatchDecision:
    """Map ``[battery, fuel_cell, generator, island]`` to a decision.

    Out-of-range components are clamped. Positive battery means charge.
    """
    a = np.asarray(action, dtype=float).reshape(-1)
    if a.size != 4:
        raise ValueError(f"continuous action needs 4 components, got {a.size}")
    a = np.nan_to_num(a, nan=0.0)
    b = float(np.clip(a[0], -1.0, 1.0))
    f = float(np.clip(a[1], 0.0, 1.0))
    g = float(np.clip(a[2], 0.0, 1.0))
    isl = float(np.clip(a[3], 0.0, 1.0))
    dt = cfg.dt_hours
    c = d = 0.0
    if b > 0:
        c = min(b * cfg.battery_max_charge_kw * dt, inp.charge_cap)
    elif b < 0:
        d = min(-b * cfg.battery_max_discharge_kw * dt, inp.discharge_cap)
    return DispatchDecision(
        charge=c,
        discharge=d,
        fuel_cell=f * inp.fuel_cap,
        generator=g * inp.generator_cap,
        islanded=isl >= 0.5,
        surplus="export",
        absorb_surplus=True,
    )


def transition(state: MicrogridState, dec: DispatchDecision, scenario: Scenario,
               fuel_level: float | None = None, generator_level: float | None = None) -> MicrogridState:
    """Apply one decision at ``state.step_index`` and return the next state."""
    t = state.step_index
    if t >= scenario.horizon:
        raise EpisodeFinished(f"step {t} is past the scenario horizon {scenario.horizon}")
    cfg = scenario.config
    inp = step_inputs(state, scenario)
    flows, islanded = settle(inp, dec)

    soc = state.soc_kwh + flows.battery_charge - flows.battery_discharge
    soc = min(max(soc, 0.0), cfg.battery_capacity_kwh)

    epochs = scenario.load.start_epoch + t * scenario.load.resolution
    day_import = state.day_import_kwh
    if t > 0:
        prev_day = (epochs - scenario.load.resolution) // SECONDS_PER_DAY
        if epochs // SECONDS_PER_DAY != prev_day:
            day_import = 0.0
    if isinstance(scenario.price, TieredTariff):
        buy_cost = scenario.price.marginal_cost(day_import, flows.grid_import)
    else:
        buy_cost = scenario.buy_price_at(t) * flows.grid_import
    sell_revenue = scenario.sell_price_at(t) * flows.grid_export

    if fuel_level is None:
        fuel_level = flows.fuel_cell / inp.fuel_cap if inp.fuel_cap > 0 else 0.0
    if generator_level is None:
        generator_level = flows.generator / inp.generator_cap if inp.generator_cap > 0 else 0.0
    return MicrogridState(
        step_index=t + 1,
        soc_kwh=soc,
        islanded=islanded,
        capacity_kwh=cfg.battery_capacity_kwh,
        last_flows=flows,
        day_import_kwh=day_import + flows.grid_import,
        buy_cost=buy_cost,
        sell_revenue=sell_revenue,
        fuel_cell_level=fuel_level,
        generator_level=generator_level,
    )


def initial_state(scenario: Scenario, start: int = 0) -> MicrogridState:
    cfg = scenario.config
    return MicrogridState(
        step_index=start,
        soc_kwh=cfg.initial_soc_kwh,
        islanded=False,
        capacity_kwh=cfg.battery_capacity_kwh,
    )


def step_discrete(state: MicrogridState, action: int, scenario: Scenario) -> MicrogridState:
    if not 0 <= int(action) < N_DISCRETE_ACTIONS:
        raise ValueError(f"discrete action must be in [0, {N_DISCRETE_ACTIONS - 1}], got {action}")
    if state.step_index >= scenario.horizon:
        raise EpisodeFinished("episode already finished")
    return transition(state, discrete_decision(action, step_inputs(state, scenario)), scenario)


def step_continuous(state: MicrogridState, action, scenario: Scenario) -> MicrogridState:
    if state.step_index >= scenario.horizon:
        raise EpisodeFinished("episode already finished")
    a = np.clip(np.nan_to_num(np.asarray(action, dtype=float).reshape(-1), nan=0.0),
                [-1, 0, 0, 0], [1, 1, 1, 1])
    dec = continuous_decision(a, step_inputs(state, scenario), scenario.config)
    return transition(state, dec, scenario, fuel_level=float(a[1]), generator_level=float(a[2]))
