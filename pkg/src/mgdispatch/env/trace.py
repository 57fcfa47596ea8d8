"""Per-step trace CSV: the plot-data source for every command."""

from __future__ import annotations

import csv

import numpy as np

from ..core import FLOW_FIELDS, MicrogridState, Scenario

TRACE_COLUMNS = (
    ("step", "epoch", "action", "reward", "soc_kwh", "islanded")
    + FLOW_FIELDS
    + ("buy_cost", "sell_revenue")
)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    if isinstance(x, np.ndarray):
        return ";".join(repr(float(v)) for v in x)
    return str(x)


def trace_rows(states: list[MicrogridState], actions: list, rewards: list[float],
               scenario: Scenario) -> list[dict]:
    rows = []
    res = scenario.load.resolution
    for st, a, r in zip(states, actions, rewards):
        t = st.step_index - 1
        row = {"step": t, "epoch": scenario.load.start_epoch + t * res, "action": a, "reward": r,
               "soc_kwh": st.soc_kwh, "islanded": st.islanded}
        row.update(st.last_flows.as_dict())
        row["buy_cost"] = st.buy_cost
        row["sell_revenue"] = st.sell_revenue
        rows.append(row)
    return rows


def write_trace_csv(path, states, actions, rewards, scenario: Scenario) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace_rows(states, actions, rewards, scenario):
            w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])


def read_trace_csv(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)
