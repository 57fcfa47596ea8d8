"""Microgrid dispatch toolkit: scenarios, simulator, MILP and rule baselines, PPO agents."""

from .core import (
    BALANCE_TOL,
    EmptyTrace,
    Flows,
    InvariantError,
    MicrogridConfig,
    MicrogridError,
    MicrogridState,
    Scenario,
    TieredTariff,
    TimeSeries,
    seeded_rng,
)

__version__ = "0.1.0"
