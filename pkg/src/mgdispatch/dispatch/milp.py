"""Lookahead dispatch MILP with big-M linearised action products.

Per step ``j`` the model has binaries ``x[i, j]`` (i = 1 sell, 2 buy, 3 charge,
4 discharge), energies ``y[i, j]``, activations ``q[i, j]`` (``q = x * y``
through big-M rows) and states ``z[k, j]`` (k = 1 SOC, 2 fuel cell,
3 generator).

Two balance variants are built:

``as_printed``
    ``q1 + q2 + q3 + q4 + z2 + z3 = L`` with ``L`` the gross load, one action
    per step, ``z[1, 1]`` fixed to the initial SOC and the SOC recursion from
    step 2 on. Kept verbatim; note selling counts towards the load here.
``corrected``
    ``q2 + q4 + z2 + z3 - q1 - q3 = L`` with ``L`` the net load (load minus
    renewables), buy/sell and charge/discharge mutually exclusive, the SOC
    recursion applied from step 1, and charge/discharge energies capped by the
    battery rate limits. ``exclusivity="pairwise"`` (default) only forbids
    buy+sell and charge+discharge in one step, so e.g. buying to charge is
    allowed; ``"single"`` keeps one action per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import MicrogridError
from ..env.physics import DispatchDecision
from .bnb import MILPResult, branch_and_bound
from .lp import MixedIntegerProgram

MODES = ("as_printed", "corrected")
EXCLUSIVITY = ("pairwise", "single")
OBJECTIVE_MODES = ("profit", "cost_only")
GEN_BONUS = 0.1
ACTIVE_TOL = 1e-9


class BadBigM(MicrogridError, ValueError):
    pass


class Infeasible(MicrogridError, RuntimeError):
    pass


class Unbounded(MicrogridError, RuntimeError):
    pass


@dataclass
class DispatchModel:
    T: int
    mode: str
    objective_mode: str
    exclusivity: str
    big_m: float
    battery_kwh: float
    soc0: float
    prices: np.ndarray
    loads: np.ndarray
    caps: np.ndarray  # (3, T): SOC, fuel cell, generator maxima in kWh per step
    program: MixedIntegerProgram
    idx: dict = field(default_factory=dict)

    def x(self, i: int, j: int) -> int:
        return self.idx[("x", i, j)]

    def y(self, i: int, j: int) -> int:
        return self.idx[("y", i, j)]

    def q(self, i: int, j: int) -> int:
        return self.idx[("q", i, j)]

    def z(self, k: int, j: int) -> int:
        return self.idx[("z", k, j)]

    def binaries(self) -> list[int]:
        return [self.x(i, j) for j in range(1, self.T + 1) for i in range(1, 5)]

    def rounding_hint(self, x_lp: np.ndarray) -> np.ndarray:
        """Integer guesses from an LP point, best first.

        Row 0 activates the actions whose ``q`` the LP uses. Row 1 trades
        every step with the grid and idles the battery, which is always
        feasible.
        """
        guess = np.zeros(self.program.n_vars)
        for j in range(1, self.T + 1):
            q = np.array([x_lp[self.q(i, j)] for i in range(1, 5)])
            xs = np.array([x_lp[self.x(i, j)] for i in range(1, 5)])
            if self.exclusivity == "single":
                pick = int(np.argmax(q)) if q.max() > ACTIVE_TOL else int(np.argmax(xs))
                guess[self.x(pick + 1, j)] = 1.0
            else:
                for a, b in ((1, 2), (3, 4)):
                    qa, qb = q[a - 1], q[b - 1]
                    if max(qa, qb) > ACTIVE_TOL:
                        guess[self.x(a if qa >= qb else b, j)] = 1.0
        grid_only = np.zeros(self.program.n_vars)
        for j in range(1, self.T + 1):
            buy = self.mode == "corrected" and self.loads[j - 1] > 0
            grid_only[self.x(2 if buy else 1, j)] = 1.0
        return np.vstack([guess, grid_only])


def required_big_m(battery_kwh: float, loads, caps) -> float:
    return 10.0 * max(battery_kwh, float(np.max(np.abs(loads), initial=0.0)),
                      float(np.max(caps, initial=0.0)), 1.0)


def build_milp(loads, prices, battery_kwh: float, soc0: float | None = None,
               fuel_cap=0.0, generator_cap=0.0, mode: str = "corrected",
               objective_mode: str = "profit", big_m: float | None = None,
               charge_cap: float | None = None, discharge_cap: float | None = None,
               exclusivity: str = "pairwise") -> DispatchModel:
    """Build the dispatch MILP over one window.

    ``loads`` and caps are per-step energies (kWh); ``prices`` in CAD/kWh.
    ``objective_mode="cost_only"`` drops the fuel-cell/generator bonus and
    only applies to the corrected mode. Rate caps are ignored in the
    as-printed mode.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if objective_mode not in OBJECTIVE_MODES:
        raise ValueError(f"objective_mode must be one of {OBJECTIVE_MODES}")
    if exclusivity not in EXCLUSIVITY:
        raise ValueError(f"exclusivity must be one of {EXCLUSIVITY}")
    if mode == "as_printed":
        exclusivity = "single"
    L = np.asarray(loads, dtype=float).reshape(-1)
    P = np.asarray(prices, dtype=float).reshape(-1)
    T = L.size
    if T < 1:
        raise ValueError("window must hold at least one step")
    if P.size != T:
        raise ValueError("prices and loads differ in length")
    if mode == "as_printed" and np.any(L < 0):
        raise ValueError("as_printed mode takes gross (non-negative) loads")
    B = float(battery_kwh)
    soc0 = 0.5 * B if soc0 is None else float(soc0)
    caps = np.vstack([np.full(T, B), np.broadcast_to(np.asarray(fuel_cap, dtype=float), T),
                      np.broadcast_to(np.asarray(generator_cap, dtype=float), T)])
    need = required_big_m(B, L, caps)
    M = need if big_m is None else float(big_m)
    if M < need:
        raise BadBigM(f"big-M {M} is below the data bound {need}")
    bonus = GEN_BONUS if (mode == "as_printed" or objective_mode == "profit") else 0.0

    y_cap = {1: np.inf, 2: np.inf, 3: B, 4: B}
    if mode == "corrected":
        if charge_cap is not None:
            y_cap[3] = min(B, float(charge_cap))
        if discharge_cap is not None:
            y_cap[4] = min(B, float(discharge_cap))

    prog = MixedIntegerProgram(sense="max", name="MGDISP")
    idx = {}
    for j in range(1, T + 1):
        for i in range(1, 5):
            idx[("x", i, j)] = prog.add_var(f"X{i}{j:05d}", 0.0, 1.0, integer=True)
        for i in range(1, 5):
            idx[("y", i, j)] = prog.add_var(f"Y{i}{j:05d}", 0.0, y_cap[i])
        for i in range(1, 5):
            obj = {1: P[j - 1], 2: -P[j - 1]}.get(i, 0.0)
            idx[("q", i, j)] = prog.add_var(f"Q{i}{j:05d}", 0.0, np.inf, obj=obj)
        for k in range(1, 4):
            obj = bonus if k > 1 else 0.0
            idx[("z", k, j)] = prog.add_var(f"Z{k}{j:05d}", 0.0, caps[k - 1, j - 1], obj=obj)

    model = DispatchModel(T, mode, objective_mode, exclusivity, M, B, soc0, P, L, caps, prog, idx)
    x, y, q, z = model.x, model.y, model.q, model.z
    for j in range(1, T + 1):
        if mode == "as_printed":
            bal = {q(1, j): 1, q(2, j): 1, q(3, j): 1, q(4, j): 1, z(2, j): 1, z(3, j): 1}
        else:
            bal = {q(2, j): 1, q(4, j): 1, z(2, j): 1, z(3, j): 1, q(1, j): -1, q(3, j): -1}
        prog.add_row(f"B{j:05d}", bal, "E", L[j - 1])
        if exclusivity == "single":
            prog.add_row(f"E{j:05d}", {x(i, j): 1 for i in range(1, 5)}, "E", 1.0)
        else:
            prog.add_row(f"EG{j:05d}", {x(1, j): 1, x(2, j): 1}, "L", 1.0)
            prog.add_row(f"EB{j:05d}", {x(3, j): 1, x(4, j): 1}, "L", 1.0)
        if j == 1:
            if mode == "as_printed":
                prog.add_row(f"S{j:05d}", {z(1, 1): 1}, "E", soc0)
            else:
                prog.add_row(f"S{j:05d}", {z(1, 1): 1, q(3, 1): -1, q(4, 1): 1}, "E", soc0)
        if j > 1:
            prog.add_row(f"S{j:05d}", {z(1, j): 1, z(1, j - 1): -1, q(3, j): -1, q(4, j): 1}, "E", 0.0)
        for i in range(1, 5):
            prog.add_row(f"LA{i}{j:05d}", {q(i, j): 1, y(i, j): -1}, "L", 0.0)
            prog.add_row(f"LB{i}{j:05d}", {q(i, j): 1, y(i, j): -1, x(i, j): -M}, "G", -M)
            prog.add_row(f"LC{i}{j:05d}", {q(i, j): 1, x(i, j): -M}, "L", 0.0)
    return model


@dataclass
class MilpSolution:
    status: str
    objective: float | None
    assignment: np.ndarray | None
    nodes: int = 0
    best_bound: float | None = None
    incumbent_history: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.assignment is not None


def solve_milp(model: DispatchModel, time_limit_s: float | None = None, gap_tol: float = 1e-9,
               backend: str = "embedded") -> MilpSolution:
    """Solve the dispatch MILP.

    Raises :class:`Infeasible` / :class:`Unbounded`. When the time limit
    stops the search the best incumbent is returned with status ``TimeLimit``.
    """
    if backend == "embedded":
        res = branch_and_bound(model.program, time_limit_s, gap_tol, heuristic=model.rounding_hint)
    elif backend == "highs":
        res = _solve_highs(model.program, time_limit_s, gap_tol)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if res.status == "Infeasible":
        raise Infeasible("dispatch window is infeasible")
    if res.status == "Unbounded":
        raise Unbounded("dispatch window is unbounded")
    return MilpSolution(res.status, res.objective, res.x, res.nodes, res.best_bound,
                        list(res.incumbent_history), res.elapsed_s)


def _solve_highs(prog: MixedIntegerProgram, time_limit_s, gap_tol) -> MILPResult:
    from scipy.optimize import Bounds, LinearConstraint, milp

    c, A, rs, b, lb, ub, is_int = prog.arrays()
    sgn = -1.0 if prog.sense == "max" else 1.0
    lo = np.where(rs == "L", -np.inf, b)
    hi = np.where(rs == "G", np.inf, b)
    options = {"mip_rel_gap": gap_tol}
    if time_limit_s is not None:
        options["time_limit"] = float(time_limit_s)
    r = milp(sgn * c, constraints=LinearConstraint(A, lo, hi), integrality=is_int.astype(int),
             bounds=Bounds(lb, ub), options=options)
    if r.status == 2:
        return MILPResult("Infeasible")
    if r.status == 3:
        return MILPResult("Unbounded")
    if r.x is None:
        return MILPResult("TimeLimit")
    x = r.x.copy()
    x[is_int] = np.round(x[is_int])
    status = "Optimal" if r.status == 0 else "TimeLimit"
    obj = float(c @ x)
    return MILPResult(status, obj, x, obj, 0, [obj])


def decisions_from_solution(model: DispatchModel, x: np.ndarray) -> list[DispatchDecision]:
    """Per-step energies to replay in the simulator; residuals go to the grid."""
    out = []
    for j in range(1, model.T + 1):
        c = float(x[model.q(3, j)])
        d = float(x[model.q(4, j)])
        if c > 0 and d > 0:
            c, d = max(c - d, 0.0), max(d - c, 0.0)
        out.append(DispatchDecision(
            charge=c if c > ACTIVE_TOL else 0.0,
            discharge=d if d > ACTIVE_TOL else 0.0,
            fuel_cell=max(float(x[model.z(2, j)]), 0.0),
            generator=max(float(x[model.z(3, j)]), 0.0),
            surplus="export",
            island_when_idle=True,
        ))
    return out
