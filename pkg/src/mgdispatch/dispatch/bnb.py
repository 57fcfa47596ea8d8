"""Best-bound branch-and-bound over integer columns, LP relaxations by simplex."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lp import MixedIntegerProgram
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp

INT_TOL = 1e-6
TIME_LIMIT = "TimeLimit"
NODE_LIMIT = "NodeLimit"

Heuristic = Callable[[np.ndarray], Optional[np.ndarray]]


@dataclass
class MILPResult:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    best_bound: float | None = None
    nodes: int = 0
    incumbent_history: list[float] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def gap(self) -> float | None:
        if self.objective is None or self.best_bound is None:
            return None
        return abs(self.best_bound - self.objective) / max(1.0, abs(self.objective))


def branch_and_bound(prog: MixedIntegerProgram, time_limit_s: float | None = None,
                     gap_tol: float = 1e-9, heuristic: Heuristic | None = None,
                     heuristic_every: int = 25, node_limit: int | None = None) -> MILPResult:
    """Solve ``prog``; objective values are reported in the program's own sense.

    ``heuristic`` maps an LP solution to a full integer assignment (or a 2-D
    stack of candidates, tried in order, or ``None``); the remaining columns
    are then re-solved with those integers fixed.
    """
    t0 = time.monotonic()
    c, A, rs, b, lb0, ub0, is_int = prog.arrays()
    sgn = -1.0 if prog.sense == "max" else 1.0
    cmin = sgn * c
    int_idx = np.flatnonzero(is_int)
    lb0 = lb0.copy()
    ub0 = ub0.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    best_x, best_val = None, math.inf  # minimisation internally
    history: list[float] = []
    nodes = 0

    def result(status, bound):
        elapsed = time.monotonic() - t0
        obj = None if best_x is None else sgn * best_val
        bb = None if bound is None else sgn * bound
        return MILPResult(status, obj, best_x, bb, nodes, history, elapsed)

    def offer(x, val):
        nonlocal best_x, best_val
        if val < best_val - 1e-12:
            best_x, best_val = x, val
            history.append(sgn * val)

    def try_heuristic(x_lp, lo, hi):
        guesses = heuristic(x_lp)
        if guesses is None:
            return
        for guess in np.atleast_2d(np.asarray(guesses, dtype=float)):
            g = np.round(guess[int_idx])
            if np.any(g < lo[int_idx] - INT_TOL) or np.any(g > hi[int_idx] + INT_TOL):
                continue
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[int_idx] = g
            hi2[int_idx] = g
            r = solve_lp(cmin, A, rs, b, lo2, hi2)
            if r.status == OPTIMAL:
                x = r.x.copy()
                x[int_idx] = g
                offer(x, float(cmin @ x))
                return

    counter = itertools.count()
    root = solve_lp(cmin, A, rs, b, lb0, ub0)
    nodes = 1
    if root.status == INFEASIBLE:
        return result(INFEASIBLE, None)
    if root.status == UNBOUNDED:
        return result(UNBOUNDED, None)
    if root.status != OPTIMAL:
        return result(root.status, None)
    if heuristic is not None:
        try_heuristic(root.x, lb0, ub0)  # before any limit check, so limited runs keep an incumbent
    heap = [(root.objective, next(counter), lb0, ub0, root)]

    while heap:
        bound = heap[0][0]
        if best_x is not None and best_val - bound <= gap_tol * max(1.0, abs(best_val)):
            return result(OPTIMAL, min(bound, best_val))
        if time_limit_s is not None and time.monotonic() - t0 > time_limit_s:
            return result(TIME_LIMIT, bound)
        if node_limit is not None and nodes >= node_limit:
            return result(NODE_LIMIT, bound)
        node_bound, _, lo, hi, lp = heapq.heappop(heap)
        if lp is None:
            lp = solve_lp(cmin, A, rs, b, lo, hi)
            nodes += 1
            if lp.status != OPTIMAL:
                continue
        if best_x is not None and lp.objective >= best_val - 1e-12:
            continue
        x = lp.x
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            xr = x.copy()
            xr[int_idx] = np.round(xr[int_idx])
            offer(xr, float(cmin @ xr))
            continue
        if heuristic is not None and (nodes % heuristic_every == 0 or best_x is None):
            try_heuristic(x, lo, hi)
        k = int(int_idx[np.argmax(frac)])  # most fractional
        v = x[k]
        down_hi = hi.copy()
        down_hi[k] = math.floor(v)
        up_lo = lo.copy()
        up_lo[k] = math.ceil(v)
        for clo, chi in ((lo, down_hi), (up_lo, hi)):
            child = solve_lp(cmin, A, rs, b, clo, chi)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            if best_x is not None and child.objective >= best_val - 1e-12:
                continue
            heapq.heappush(heap, (child.objective, next(counter), clo, chi, child))
    if best_x is None:
        return result(INFEASIBLE, None)
    return result(OPTIMAL, best_val)
