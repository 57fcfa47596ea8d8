"""Price-agnostic rule-based dispatcher."""

from __future__ import annotations

from ..core import MicrogridState, Scenario
from ..env.envs import DiscreteMicrogridEnv, MicrogridEnv
from ..env.physics import DispatchDecision, StepInputs, step_inputs

VARIANTS = ("simple", "mesa")


def rule_decision(inp: StepInputs, variant: str = "simple") -> DispatchDecision:
    """Surplus charges the battery and the rest is sold. A deficit draws on
    the battery (``simple``) or generator, fuel cell, battery (``mesa``);
    whatever is left comes from the grid."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    surplus, deficit = inp.surplus, inp.deficit
    if surplus > 0:
        return DispatchDecision(charge=min(surplus, inp.charge_cap), surplus="export",
                                island_when_idle=True)
    gen = fuel = 0.0
    if variant == "mesa":
        gen = min(deficit, inp.generator_cap)
        fuel = min(deficit - gen, inp.fuel_cap)
    discharge = min(deficit - gen - fuel, inp.discharge_cap)
    return DispatchDecision(discharge=max(discharge, 0.0), fuel_cell=fuel,
                            generator=gen, surplus="export", island_when_idle=True)


def rule_based_step(state: MicrogridState, scenario: Scenario, variant: str = "simple") -> DispatchDecision:
    return rule_decision(step_inputs(state, scenario), variant)


def run_rule_baseline(scenario: Scenario, variant: str = "simple",
                      env: MicrogridEnv | None = None) -> MicrogridEnv:
    """Run one full-horizon episode; the returned env holds trace and rewards."""
    env = env or DiscreteMicrogridEnv(scenario)
    env.reset(start=0)
    while not env.done:
        dec = rule_decision(env.step_inputs(), variant)
        env.apply(dec, action="rule")
    return env
