"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np

BONUS = 0.1


def _units(v) -> int:
    u = 2.0 * float(v)
    if abs(u - round(u)) > 1e-9:
        raise ValueError(f"{v} is not a multiple of 0.5")
    return int(round(u))


def brute_force_dispatch(loads, prices, battery_kwh, soc0, fuel_cap=0.0, generator_cap=0.0,
                         mode="corrected", objective_mode="profit", exclusivity="pairwise",
                         charge_cap=None, discharge_cap=None) -> float:
    """Exhaustive optimum of the dispatch problem on a 0.5 kWh grid.

    Walks every SOC path and every fuel-cell / generator level on the grid; the
    grid trade then follows from the energy balance. Returns ``-inf`` when no
    schedule is feasible.
    """
    L = [_units(v) for v in loads]
    P = [float(p) for p in prices]
    Bu = _units(battery_kwh)
    c2, c3 = _units(fuel_cap), _units(generator_cap)
    bonus = BONUS if (mode == "as_printed" or objective_mode == "profit") else 0.0
    if mode == "as_printed":
        exclusivity = "single"
        ccap = dcap = Bu
    else:
        ccap = Bu if charge_cap is None else min(Bu, _units(charge_cap))
        dcap = Bu if discharge_cap is None else min(Bu, _units(discharge_cap))

    best = {_units(soc0): 0.0}
    for j, (lj, pj) in enumerate(zip(L, P)):
        nxt: dict[int, float] = {}

        def offer(s, v):
            if v > nxt.get(s, -np.inf):
                nxt[s] = v

        for s, base in best.items():
            for z2, z3 in itertools.product(range(c2 + 1), range(c3 + 1)):
                gen = bonus * (z2 + z3) / 2.0
                if mode == "as_printed":
                    qa = lj - z2 - z3
                    if qa < 0:
                        continue
                    offer(s, base + gen + pj * qa / 2.0)   # sell
                    offer(s, base + gen - pj * qa / 2.0)   # buy
                    if qa <= Bu:                           # charge / discharge
                        if j == 0:
                            offer(s, base + gen)
                        else:
                            if s + qa <= Bu:
                                offer(s + qa, base + gen)
                            if s - qa >= 0:
                                offer(s - qa, base + gen)
                    continue
                for s2 in range(Bu + 1):
                    delta = s2 - s
                    if delta > ccap or -delta > dcap:
                        continue
                    r = lj + delta - z2 - z3   # buy (>0) or sell (<0) energy
                    if exclusivity == "single" and delta != 0 and r != 0:
                        continue
                    offer(s2, base + gen - pj * r / 2.0)
        best = nxt
        if not best:
            return -np.inf
    return max(best.values())

