"""Random small dispatch instances on the 0.5 kWh grid."""

from __future__ import annotations

import numpy as np


def random_instance(rng: np.random.Generator, mode: str | None = None) -> dict:
    mode = mode or ("as_printed" if rng.random() < 0.5 else "corrected")
    T = int(rng.integers(1, 5))
    B = float(rng.integers(1, 11))
    if mode == "as_printed":
        loads = rng.integers(0, 21, T) / 2.0
    else:
        loads = rng.integers(-20, 21, T) / 2.0
    kw = dict(
        loads=loads,
        prices=np.round(rng.uniform(0.01, 3.0, T), 3),
        battery_kwh=B,
        soc0=float(rng.integers(0, int(2 * B) + 1)) / 2.0,
        fuel_cap=float(rng.integers(0, 5)) / 2.0,
        generator_cap=float(rng.integers(0, 5)) / 2.0,
        mode=mode,
        objective_mode="profit" if rng.random() < 0.5 else "cost_only",
        exclusivity="pairwise" if rng.random() < 0.5 else "single",
    )
    if mode == "corrected" and rng.random() < 0.5:
        kw["charge_cap"] = float(rng.integers(1, int(2 * B) + 1)) / 2.0
        kw["discharge_cap"] = float(rng.integers(1, int(2 * B) + 1)) / 2.0
    return kw
