import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdispatch.dispatch import BadBigM, build_milp, decisions_from_solution, required_big_m, solve_milp

from milp_instances import random_instance
from oracles import brute_force_dispatch


def test_counts_for_single_step():
    m = build_milp([5.0], [1.0], 10.0, exclusivity="single")
    names = m.program.var_names
    for prefix in "XYQ":
        assert sum(n.startswith(prefix) for n in names) == 4
    assert sum(n.startswith("Z") for n in names) == 3
    assert sum(m.program.integer) == 4
    assert [r for r in m.program.row_names if r.startswith("E")] == ["E00001"]
    row = m.program.rows[m.program.row_names.index("E00001")]
    assert sorted(row.values()) == [1.0] * 4 and m.program.rhs[m.program.row_names.index("E00001")] == 1.0


def test_pairwise_exclusivity_rows():
    m = build_milp([5.0], [1.0], 10.0)
    assert [r for r in m.program.row_names if r.startswith("E")] == ["EG00001", "EB00001"]


def test_soc_recursion_row_present():
    m = build_milp([5.0, 5.0], [1.0, 3.0], 10.0)
    row = m.program.rows[m.program.row_names.index("S00002")]
    want = {m.z(1, 2): 1.0, m.z(1, 1): -1.0, m.q(3, 2): -1.0, m.q(4, 2): 1.0}
    assert row == want and m.program.rhs[m.program.row_names.index("S00002")] == 0.0


def test_linearisation_rows():
    m = build_milp([5.0, -2.0], [1.0, 3.0], 10.0)
    M = m.big_m
    for i in range(1, 5):
        for j in (1, 2):
            names = m.program.row_names
            la = m.program.rows[names.index(f"LA{i}{j:05d}")]
            lb = m.program.rows[names.index(f"LB{i}{j:05d}")]
            lc = m.program.rows[names.index(f"LC{i}{j:05d}")]
            assert la == {m.q(i, j): 1.0, m.y(i, j): -1.0}
            assert lb == {m.q(i, j): 1.0, m.y(i, j): -1.0, m.x(i, j): -M}
            assert lc == {m.q(i, j): 1.0, m.x(i, j): -M}


def test_as_printed_sells_toward_load():
    m = build_milp([5.0], [1.0], 10.0, mode="as_printed")
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(5.0, abs=1e-9)
    assert sol.assignment[m.x(1, 1)] == 1.0


def test_corrected_two_step_example():
    m = build_milp([5.0, 5.0], [1.0, 3.0], 10.0, soc0=5.0, exclusivity="single")
    sol = solve_milp(m)
    assert sol.status == "Optimal"
    assert -sol.objective == pytest.approx(5.0, abs=1e-9)
    x = sol.assignment
    assert x[m.x(2, 1)] == 1.0 and x[m.q(2, 1)] == pytest.approx(5.0)
    assert x[m.x(4, 2)] == 1.0 and x[m.q(4, 2)] == pytest.approx(5.0)


def test_corrected_two_step_pairwise_arbitrage():
    # with grid and battery decoupled the battery buys low and sells high
    m = build_milp([5.0, 5.0], [1.0, 3.0], 10.0, soc0=5.0)
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(brute_force_dispatch([5, 5], [1, 3], 10, 5), abs=1e-9)
    assert sol.objective == pytest.approx(5.0, abs=1e-9)


def test_zero_load_do_nothing():
    sol = solve_milp(build_milp([0.0], [1.0], 10.0, exclusivity="single"))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    sol = solve_milp(build_milp([0.0], [1.0], 10.0, soc0=0.0))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    # pairwise lets a half-full battery sell its 5 kWh even with no load
    assert solve_milp(build_milp([0.0], [1.0], 10.0)).objective == pytest.approx(5.0, abs=1e-9)


def test_big_m_bound():
    assert required_big_m(10.0, [5.0, -30.0], np.zeros((3, 2))) == 300.0
    with pytest.raises(BadBigM):
        build_milp([5.0], [1.0], 10.0, big_m=50.0)
    build_milp([5.0], [1.0], 10.0, big_m=100.0)
    with pytest.raises(BadBigM):
        build_milp([500.0], [1.0], 10.0, big_m=1000.0)


def test_assignment_satisfies_constraints():
    rng = np.random.default_rng(3)
    m = build_milp(rng.uniform(-10, 10, 6), rng.uniform(0.1, 1, 6), 8.0, fuel_cap=2, generator_cap=3,
                   charge_cap=3.0, discharge_cap=3.0)
    sol = solve_milp(m)
    assert m.program.max_violation(sol.assignment) <= 1e-6


def test_embedded_matches_highs():
    rng = np.random.default_rng(5)
    for _ in range(10):
        kw = random_instance(rng)
        a = solve_milp(build_milp(**kw)).objective
        b = solve_milp(build_milp(**kw), backend="highs").objective
        assert a == pytest.approx(b, abs=1e-6)


def test_decisions_follow_schedule():
    m = build_milp([5.0, 5.0], [1.0, 3.0], 10.0, soc0=5.0, exclusivity="single")
    dec = decisions_from_solution(m, solve_milp(m).assignment)
    assert dec[0].charge == 0.0 and dec[0].discharge == 0.0
    assert dec[1].discharge == pytest.approx(5.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_brute_force(seed):
    kw = random_instance(np.random.default_rng(seed))
    want = brute_force_dispatch(**kw)
    got = solve_milp(build_milp(**kw)).objective
    assert abs(got - want) <= 1e-6, kw


def test_time_limit_returns_incumbent():
    rng = np.random.default_rng(0)
    m = build_milp(rng.uniform(-20, 20, 24).round(1), rng.uniform(0.05, 0.15, 24), 50.0,
                   charge_cap=12.5, discharge_cap=12.5, exclusivity="single")
    t0 = time.monotonic()
    sol = solve_milp(m, time_limit_s=0.0)
    assert time.monotonic() - t0 < 30
    assert sol.status == "TimeLimit" and sol.has_solution
    assert sol.best_bound >= sol.objective - 1e-9
    assert m.program.max_violation(sol.assignment) <= 1e-6
