"""Receding-horizon MILP dispatch replayed through the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import MicrogridError, Scenario, TieredTariff
from ..env.envs import DiscreteMicrogridEnv, MicrogridEnv
from .milp import DispatchModel, Infeasible, build_milp, decisions_from_solution, solve_milp


class NoIncumbent(MicrogridError, RuntimeError):
    """The solver stopped without any feasible schedule for a window."""


def window_inputs(scenario: Scenario, start: int, stop: int, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-step energies (kWh) and prices for ``[start, stop)``.

    Corrected mode uses net load, as-printed the gross load. Block tariffs
    are priced at their first-tier rate.
    """
    dt = scenario.config.dt_hours
    load = scenario.load.values[start:stop] * dt
    if mode == "corrected":
        load = load - scenario.renewable_kw[start:stop] * dt
    if isinstance(scenario.price, TieredTariff):
        prices = np.full(stop - start, scenario.price.tier1_rate)
    else:
        prices = scenario.price.values[start:stop].astype(float)
    return load, prices


def build_window_milp(scenario: Scenario, start: int, stop: int, soc0: float,
                      mode: str = "corrected", objective_mode: str = "cost_only",
                      big_m: float | None = None, exclusivity: str = "pairwise") -> DispatchModel:
    cfg = scenario.config
    dt = cfg.dt_hours
    loads, prices = window_inputs(scenario, start, stop, mode)
    return build_milp(
        loads, prices, cfg.battery_capacity_kwh, soc0=soc0,
        fuel_cap=cfg.fuel_cell_max_kw * dt, generator_cap=cfg.generator_max_kw * dt,
        mode=mode, objective_mode=objective_mode, big_m=big_m,
        charge_cap=cfg.battery_max_charge_kw * dt, discharge_cap=cfg.battery_max_discharge_kw * dt,
        exclusivity=exclusivity,
    )


@dataclass
class RecedingResult:
    env: MicrogridEnv
    statuses: list[str] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)

    @property
    def metrics(self) -> dict:
        return self.env.metrics()


def receding_horizon_run(scenario: Scenario, window_steps: int | None = None, mode: str = "corrected",
                         objective_mode: str = "cost_only", time_limit_s: float | None = None,
                         gap_tol: float = 1e-9, backend: str = "embedded",
                         exclusivity: str = "pairwise") -> RecedingResult:
    """Solve consecutive windows, each starting from the simulated SOC left by
    the previous one, and replay every schedule in the environment."""
    H = scenario.horizon
    window_steps = window_steps or H
    if not 1 <= window_steps <= H:
        raise ValueError(f"window_steps must be in [1, {H}], got {window_steps}")
    env = DiscreteMicrogridEnv(scenario)
    env.reset(start=0)
    out = RecedingResult(env)
    for start in range(0, H, window_steps):
        stop = min(start + window_steps, H)
        model = build_window_milp(scenario, start, stop, env.state.soc_kwh, mode, objective_mode,
                                  exclusivity=exclusivity)
        try:
            sol = solve_milp(model, time_limit_s, gap_tol, backend)
        except Infeasible as exc:
            raise Infeasible(f"window [{start}, {stop}) is infeasible") from exc
        if not sol.has_solution:
            raise NoIncumbent(f"no feasible schedule found for window [{start}, {stop})")
        out.statuses.append(sol.status)
        out.objectives.append(float(sol.objective))
        for dec in decisions_from_solution(model, sol.assignment):
            env.apply(dec, action="milp")
    return out
