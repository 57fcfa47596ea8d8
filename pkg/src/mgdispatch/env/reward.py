from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..core import EmptyTrace, InvariantError, MicrogridState, Scenario


@dataclass(frozen=True)
class RewardWeights:
    """Per-unit reward weights.

    Energy terms are per kWh, money terms per CAD. ``w_buy`` multiplies the
    purchase cost and is subtracted, so a positive value penalises buying.
    """

    w_export: float = 0.5
    w_renewable_ratio: float = 1.0
    w_soc_mid: float = 0.2
    w_unmet: float = -100.0
    w_grid_connected: float = -1.0
    w_import: float = -0.1
    w_buy: float = 1.0
    w_sell: float = 1.0

    def __post_init__(self):
        if not self.w_unmet < 0:
            raise InvariantError("w_unmet must be negative")
        others = [abs(getattr(self, f.name)) for f in fields(self) if f.name != "w_unmet"]
        if not abs(self.w_unmet) > max(others):
            raise InvariantError("|w_unmet| must exceed every other weight magnitude")

    def as_dict(self) -> dict:
        return asdict(self)


def reward(state: MicrogridState, weights: RewardWeights) -> float:
    f = state.last_flows
    supplied = f.total_supplied
    ratio = f.renewable_used / supplied if supplied > 0 else 0.0
    soc_term = 1.0 - abs(state.soc_fraction - 0.5) * 2.0
    connected = 0.0 if state.islanded else 1.0
    return (
        weights.w_export * f.grid_export
        + weights.w_sell * state.sell_revenue
        - weights.w_buy * state.buy_cost
        + weights.w_renewable_ratio * ratio
        + weights.w_soc_mid * soc_term
        + weights.w_grid_connected * connected
        + weights.w_import * f.grid_import
        + weights.w_unmet * f.unmet_load
    )


METRIC_KEYS = ("cost_cad", "island_fraction", "grid_load_fraction", "unmet_fraction")


def episode_metrics(trace: list[MicrogridState], scenario: Scenario | None = None) -> dict:
    """Aggregate cost and autonomy figures over a complete trace.

    ``trace`` holds post-step states; the reset state must not be included.
    """
    if not trace:
        raise EmptyTrace("cannot compute metrics of an empty trace")
    load = sum(s.last_flows.load for s in trace)
    imports = sum(s.last_flows.grid_import for s in trace)
    unmet = sum(s.last_flows.unmet_load for s in trace)
    cost = sum(s.buy_cost for s in trace) - sum(s.sell_revenue for s in trace)
    return {
        "cost_cad": float(cost),
        "island_fraction": sum(1 for s in trace if s.islanded) / len(trace),
        "grid_load_fraction": float(imports / load) if load > 0 else 0.0,
        "unmet_fraction": float(unmet / load) if load > 0 else 0.0,
    }
