"""Solver-neutral mixed-integer linear program."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MixedIntegerProgram:
    """``optimize c.x`` subject to ``A x (<=|>=|=) b`` and ``lb <= x <= ub``.

    ``row_sense`` holds ``"L"``, ``"G"`` or ``"E"`` per row; ``sense`` is
    ``"max"`` or ``"min"``.
    """

    var_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    row_sense: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    sense: str = "max"
    name: str = "MODEL"

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, integer: bool = False,
                obj: float = 0.0) -> int:
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(integer))
        self.obj.append(float(obj))
        return len(self.var_names) - 1

    def add_row(self, name: str, coeffs: dict[int, float], sense: str, rhs: float) -> int:
        if sense not in ("L", "G", "E"):
            raise ValueError(f"row sense must be L, G or E, got {sense!r}")
        self.row_names.append(name)
        self.rows.append({int(k): float(v) for k, v in coeffs.items() if v != 0.0})
        self.row_sense.append(sense)
        self.rhs.append(float(rhs))
        return len(self.row_names) - 1

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def dense(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_vars))
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                A[i, j] = v
        return A

    def arrays(self):
        """``(c, A, row_sense, b, lb, ub, integer)`` as numpy arrays."""
        return (np.array(self.obj, dtype=float), self.dense(), np.array(self.row_sense),
                np.array(self.rhs, dtype=float), np.array(self.lb, dtype=float),
                np.array(self.ub, dtype=float), np.array(self.integer, dtype=bool))

    def objective_value(self, x) -> float:
        return float(np.dot(self.obj, x))

    def max_violation(self, x) -> float:
        """Largest bound, row or integrality violation of ``x``."""
        x = np.asarray(x, dtype=float)
        viol = 0.0
        lb, ub = np.array(self.lb), np.array(self.ub)
        viol = max(viol, float(np.max(np.maximum(lb - x, 0.0), initial=0.0)))
        viol = max(viol, float(np.max(np.maximum(x - ub, 0.0), initial=0.0)))
        if any(self.integer):
            xi = x[np.array(self.integer)]
            viol = max(viol, float(np.max(np.abs(xi - np.round(xi)), initial=0.0)))
        for row, s, b in zip(self.rows, self.row_sense, self.rhs):
            ax = sum(v * x[j] for j, v in row.items())
            if s == "L":
                viol = max(viol, ax - b)
            elif s == "G":
                viol = max(viol, b - ax)
            else:
                viol = max(viol, abs(ax - b))
        return viol

    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.var_names)}
