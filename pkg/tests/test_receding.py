import numpy as np
import pytest

from mgdispatch.core import MicrogridConfig, seeded_rng
from mgdispatch.dispatch import (
    build_window_milp,
    receding_horizon_run,
    run_rule_baseline,
    solve_milp,
    window_inputs,
)

from scenarios import flat_scenario

CFG = MicrogridConfig(battery_capacity_kwh=40.0, battery_max_charge_kw=10.0,
                      battery_max_discharge_kw=10.0)


def _scenario(seed, steps=12, price=None, config=CFG):
    rng = seeded_rng(seed)
    load = rng.uniform(5, 30, steps)
    solar = np.clip(rng.uniform(-10, 40, steps), 0, None)
    price = rng.uniform(0.05, 0.15, steps) if price is None else price
    return flat_scenario(list(load), list(solar), price=price, config=config)


def test_window_inputs_are_net_energy():
    sc = flat_scenario([10.0, 5.0], [4.0, 9.0], price=[0.1, 0.2])
    loads, prices = window_inputs(sc, 0, 2, "corrected")
    assert loads.tolist() == [6.0, -4.0] and prices.tolist() == [0.1, 0.2]
    assert window_inputs(sc, 0, 2, "as_printed")[0].tolist() == [10.0, 5.0]


def test_full_window_equals_single_solve():
    sc = _scenario(0)
    res = receding_horizon_run(sc)
    sol = solve_milp(build_window_milp(sc, 0, sc.horizon, CFG.initial_soc_kwh))
    assert res.statuses == ["Optimal"] and res.objectives[0] == pytest.approx(sol.objective, abs=1e-9)
    # flat buy/sell price: simulated cost is the negated cost-only objective
    assert res.metrics["cost_cad"] == pytest.approx(-sol.objective, abs=1e-9)
    assert res.metrics["unmet_fraction"] == 0.0


def test_milp_not_worse_than_rule():
    for seed in range(3):
        sc = _scenario(seed, 16)
        milp_cost = receding_horizon_run(sc).metrics["cost_cad"]
        rule = run_rule_baseline(sc).metrics()
        assert milp_cost <= rule["cost_cad"] + 1e-9 and rule["unmet_fraction"] == 0.0


def test_two_windows_with_flat_soc_are_additive():
    # constant price and an empty battery: storing energy never pays, so every
    # window ends where it started and the windows decouple
    cfg = MicrogridConfig(battery_capacity_kwh=40.0, battery_max_charge_kw=10.0,
                          battery_max_discharge_kw=10.0, initial_soc_fraction=0.0)
    sc = _scenario(3, 12, price=0.1, config=cfg)
    whole = receding_horizon_run(sc, window_steps=6)
    assert len(whole.statuses) == 2
    parts = [receding_horizon_run(sc.window(a, a + 6)) for a in (0, 6)]
    assert [p.env.state.soc_kwh for p in parts] == [0.0, 0.0]
    m, m1, m2 = whole.metrics, parts[0].metrics, parts[1].metrics
    assert m["cost_cad"] == pytest.approx(m1["cost_cad"] + m2["cost_cad"], abs=1e-9)
    assert m["island_fraction"] == pytest.approx((m1["island_fraction"] + m2["island_fraction"]) / 2)
    load1, load2 = (float(sc.load.values[a:a + 6].sum()) for a in (0, 6))
    imp = m1["grid_load_fraction"] * load1 + m2["grid_load_fraction"] * load2
    assert m["grid_load_fraction"] == pytest.approx(imp / (load1 + load2), abs=1e-12)


def test_soc_carries_between_windows():
    sc = _scenario(5, 12)
    res = receding_horizon_run(sc, window_steps=4)
    assert len(res.statuses) == 3 and len(res.env.trace) == 12
    socs = [s.soc_kwh for s in res.env.trace]
    assert all(0.0 <= s <= CFG.battery_capacity_kwh for s in socs)


def test_time_limit_status_recorded():
    rng = seeded_rng(0)
    cfg = MicrogridConfig(battery_capacity_kwh=50.0, battery_max_charge_kw=12.5,
                          battery_max_discharge_kw=12.5)
    sc = flat_scenario(list(rng.uniform(0, 40, 24)), list(rng.uniform(0, 40, 24)),
                       price=list(rng.uniform(0.05, 0.15, 24)), config=cfg)
    res = receding_horizon_run(sc, window_steps=12, time_limit_s=0.0, exclusivity="single")
    assert len(res.statuses) == 2
    assert set(res.statuses) <= {"TimeLimit", "Optimal"} and "TimeLimit" in res.statuses
    assert len(res.env.trace) == 24 and res.metrics["unmet_fraction"] == 0.0


def test_bad_window():
    with pytest.raises(ValueError):
        receding_horizon_run(_scenario(0, 4), window_steps=5)
