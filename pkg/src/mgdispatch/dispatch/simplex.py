"""Dense bounded-variable primal simplex (two phases, artificial start).

Minimises ``c.x`` subject to ``A x (<=|>=|=) b`` and ``lb <= x <= ub``.
Entering variables follow Dantzig's rule; after a run of degenerate pivots
the solver switches to Bland's rule until progress resumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"

FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-11
DEGENERATE_RUN = 50
REFRESH_EVERY = 100


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    slack: np.ndarray | None = None
    iterations: int = 0


@dataclass
class LPTableau:
    """Standard-form working state: ``T = B^-1 [A | I]``, basic values ``beta``."""

    T: np.ndarray
    beta: np.ndarray
    basis: np.ndarray
    at_upper: np.ndarray
    ub: np.ndarray
    A: np.ndarray
    b: np.ndarray

    @property
    def m(self) -> int:
        return self.T.shape[0]

    def binv(self) -> np.ndarray:
        n = self.T.shape[1] - self.m
        return self.T[:, n:]

    def refresh(self) -> None:
        """Refactor from the original data to stop round-off drift."""
        m = self.m
        full = np.hstack([self.A, np.eye(m)])
        Binv = np.linalg.inv(full[:, self.basis])
        self.T = Binv @ full
        rhs = self.b - full[:, self.at_upper] @ self.ub[self.at_upper]
        self.beta = Binv @ rhs

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = self.beta
        return x


def _iterate(tab: LPTableau, cost: np.ndarray, max_iter: int) -> tuple[str, int]:
    n_total = tab.T.shape[1]
    is_basic = np.zeros(n_total, dtype=bool)
    is_basic[tab.basis] = True
    degenerate = 0
    it = 0
    for it in range(1, max_iter + 1):
        if it % REFRESH_EVERY == 0:
            tab.refresh()
        d = cost - cost[tab.basis] @ tab.T
        can_up = (~is_basic) & (~tab.at_upper) & (d < -DUAL_TOL) & (tab.ub > FEAS_TOL)
        can_down = (~is_basic) & tab.at_upper & (d > DUAL_TOL)
        cand = np.flatnonzero(can_up | can_down)
        if cand.size == 0:
            return OPTIMAL, it - 1
        bland = degenerate >= DEGENERATE_RUN
        j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        sigma = 1.0 if can_up[j] else -1.0
        alpha = tab.T[:, j]
        sa = sigma * alpha

        theta = tab.ub[j]
        leave = -1
        leave_to_upper = False
        dec = sa > PIVOT_TOL
        if dec.any():
            rows = np.flatnonzero(dec)
            ratios = np.maximum(tab.beta[rows], 0.0) / sa[rows]
            k = _pick(ratios, rows, tab.basis, np.abs(alpha[rows]), bland)
            if ratios[k] < theta:
                theta, leave, leave_to_upper = ratios[k], int(rows[k]), False
        ub_basic = tab.ub[tab.basis]
        inc = (sa < -PIVOT_TOL) & np.isfinite(ub_basic)
        if inc.any():
            rows = np.flatnonzero(inc)
            ratios = np.maximum(ub_basic[rows] - tab.beta[rows], 0.0) / (-sa[rows])
            k = _pick(ratios, rows, tab.basis, np.abs(alpha[rows]), bland)
            if ratios[k] < theta or (leave >= 0 and ratios[k] == theta and bland
                                     and tab.basis[rows[k]] < tab.basis[leave]):
                theta, leave, leave_to_upper = ratios[k], int(rows[k]), True
        if not np.isfinite(theta):
            return UNBOUNDED, it

        degenerate = degenerate + 1 if theta <= FEAS_TOL else 0
        tab.beta -= sa * theta
        if leave < 0:
            tab.at_upper[j] = not tab.at_upper[j]
            continue
        entering_value = (tab.ub[j] if tab.at_upper[j] else 0.0) + sigma * theta
        old = int(tab.basis[leave])
        piv = alpha[leave]
        row = tab.T[leave] / piv
        tab.T -= np.outer(alpha, row)
        tab.T[leave] = row
        tab.beta[leave] = entering_value
        tab.basis[leave] = j
        is_basic[j] = True
        is_basic[old] = False
        tab.at_upper[j] = False
        tab.at_upper[old] = leave_to_upper
    return ITERATION_LIMIT, it


def _pick(ratios, rows, basis, mags, bland: bool) -> int:
    best = ratios.min()
    ties = np.flatnonzero(ratios <= best + 1e-12)
    if ties.size == 1:
        return int(ties[0])
    if bland:
        return int(ties[np.argmin(basis[rows[ties]])])
    return int(ties[np.argmax(mags[ties])])


def solve_lp(c, A, row_sense, b, lb, ub, max_iter: int | None = None) -> LPResult:
    """Minimise ``c.x``. Rows are ``"L"``, ``"G"`` or ``"E"``."""
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape if A.size else (len(b), len(c))
    if A.size == 0:
        A = np.zeros((m, n))
    if np.any(lb > ub + FEAS_TOL):
        return LPResult(INFEASIBLE)

    # column map: x = shift + sign * x' (split free columns into two)
    cols, shift, sign, col_ub, col_cost, owner = [], np.zeros(n), [], [], [], []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append(A[:, j]); sign.append(1.0); col_ub.append(hi - lo); col_cost.append(c[j]); owner.append(j)
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append(-A[:, j]); sign.append(-1.0); col_ub.append(np.inf); col_cost.append(-c[j]); owner.append(j)
        else:
            cols.append(A[:, j]); sign.append(1.0); col_ub.append(np.inf); col_cost.append(c[j]); owner.append(j)
            cols.append(-A[:, j]); sign.append(-1.0); col_ub.append(np.inf); col_cost.append(-c[j]); owner.append(j)
    n_struct = len(cols)
    slack_rows = [i for i in range(m) if row_sense[i] in ("L", "G")]
    for i in slack_rows:
        e = np.zeros(m)
        e[i] = 1.0 if row_sense[i] == "L" else -1.0
        cols.append(e); col_ub.append(np.inf); col_cost.append(0.0)
    Astd = np.column_stack(cols) if cols else np.zeros((m, 0))
    bstd = b - A @ shift
    flip = np.where(bstd < 0, -1.0, 1.0)
    Astd = Astd * flip[:, None]
    bstd = bstd * flip
    n_std = Astd.shape[1]
    ub_all = np.concatenate([np.array(col_ub, dtype=float), np.full(m, np.inf)])

    tab = LPTableau(
        T=np.hstack([Astd, np.eye(m)]),
        beta=bstd.copy(),
        basis=np.arange(n_std, n_std + m),
        at_upper=np.zeros(n_std + m, dtype=bool),
        ub=ub_all,
        A=Astd,
        b=bstd,
    )
    max_iter = max_iter or 50 * (m + n_std) + 1000

    cost1 = np.concatenate([np.zeros(n_std), np.ones(m)])
    status, it1 = _iterate(tab, cost1, max_iter)
    tab.refresh()
    infeas = float(cost1 @ tab.values())
    if status == ITERATION_LIMIT:
        return LPResult(ITERATION_LIMIT, iterations=it1)
    if infeas > FEAS_TOL * max(1.0, float(np.abs(bstd).max(initial=0.0))) * 10:
        return LPResult(INFEASIBLE, iterations=it1)
    tab.ub[n_std:] = 0.0
    tab.beta[np.isin(tab.basis, np.arange(n_std, n_std + m))] = 0.0

    cost2 = np.concatenate([np.array(col_cost, dtype=float), np.zeros(m)])
    status, it2 = _iterate(tab, cost2, max_iter)
    if status != OPTIMAL:
        return LPResult(status, iterations=it1 + it2)
    tab.refresh()
    xs = tab.values()
    x = shift.copy()
    for k in range(n_struct):
        x[owner[k]] += sign[k] * xs[k]
    y_std = cost2[tab.basis] @ tab.binv()
    d = cost2 - y_std @ np.hstack([Astd, np.eye(m)])
    red = np.zeros(n)
    for k in range(n_struct):
        red[owner[k]] = sign[k] * d[k]
    return LPResult(
        OPTIMAL,
        x=x,
        objective=float(c @ x),
        duals=y_std * flip,
        reduced_costs=red,
        slack=b - A @ x,
        iterations=it1 + it2,
    )
