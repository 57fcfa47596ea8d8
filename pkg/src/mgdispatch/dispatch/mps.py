"""Deterministic MPS (fixed format) and LP-text export and import.

Names must fit in 8 characters for MPS. Numbers are written in at most 12
characters; values needing more digits lose precision beyond the 12th
character, which is well inside the 1e-6 round-trip tolerance.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .lp import MixedIntegerProgram

MPS_NUM_WIDTH = 12
MPS_NAME_WIDTH = 8


class ModelFormatError(ValueError):
    pass


def format_number(v: float, width: int = MPS_NUM_WIDTH) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 10 ** (width - 1):
        return str(int(v))
    s = repr(v)
    if len(s) <= width:
        return s
    for digits in range(width, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= width:
            return s
    raise ModelFormatError(f"cannot fit {v} in {width} characters")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # fixed columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def _check_names(prog: MixedIntegerProgram) -> None:
    for name in list(prog.var_names) + list(prog.row_names) + [prog.name]:
        if len(name) > MPS_NAME_WIDTH or " " in name:
            raise ModelFormatError(f"name {name!r} does not fit fixed MPS")


def mps_text(prog: MixedIntegerProgram, obj_row: str = "OBJ") -> str:
    _check_names(prog)
    out = [f"NAME          {prog.name}", "OBJSENSE", "    MAX" if prog.sense == "max" else "    MIN", "ROWS"]
    out.append(_line("N", obj_row))
    for name, s in zip(prog.row_names, prog.row_sense):
        out.append(_line(s, name))

    by_col: list[list[tuple[str, float]]] = [[] for _ in range(prog.n_vars)]
    for j, c in enumerate(prog.obj):
        if c != 0.0:
            by_col[j].append((obj_row, c))
    for name, row in zip(prog.row_names, prog.rows):
        for j in sorted(row):
            by_col[j].append((name, row[j]))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, name in enumerate(prog.var_names):
        if prog.integer[j] != in_int:
            tag = "'INTORG'" if prog.integer[j] else "'INTEND'"
            out.append(f"    M{marker:07d}  'MARKER'                 {tag}")
            marker += 1
            in_int = prog.integer[j]
        entries = by_col[j]
        if not entries:
            out.append(_line("", name, obj_row, "0"))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", name, pair[0][0], format_number(pair[0][1]),
                                 pair[1][0], format_number(pair[1][1])))
            else:
                out.append(_line("", name, pair[0][0], format_number(pair[0][1])))
    if in_int:
        out.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")

    out.append("RHS")
    for name, b in zip(prog.row_names, prog.rhs):
        if b != 0.0:
            out.append(_line("", "RHS", name, format_number(b)))

    out.append("BOUNDS")
    for j, name in enumerate(prog.var_names):
        lo, hi = prog.lb[j], prog.ub[j]
        if lo == hi:
            out.append(_line("FX", "BND", name, format_number(lo)))
            continue
        if math.isinf(lo):
            out.append(_line("MI", "BND", name))
        elif lo != 0.0:
            out.append(_line("LO", "BND", name, format_number(lo)))
        if math.isfinite(hi):
            out.append(_line("UP", "BND", name, format_number(hi)))
        elif prog.integer[j]:
            out.append(_line("PL", "BND", name))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(prog: MixedIntegerProgram, path) -> None:
    Path(path).write_text(mps_text(prog))


def parse_mps(text: str) -> MixedIntegerProgram:
    """Read the fixed-format MPS subset produced by :func:`mps_text`."""
    prog = MixedIntegerProgram(sense="min")
    section = None
    obj_row = None
    row_index: dict[str, int] = {}
    col_index: dict[str, int] = {}
    in_int = False
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                prog.name = head[1] if len(head) > 1 else "MODEL"
            elif section == "OBJSENSE" and len(head) > 1:
                prog.sense = head[1].lower()
            elif section == "ENDATA":
                break
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            prog.sense = tok[0].lower()
        elif section == "ROWS":
            kind, name = tok
            if kind == "N":
                obj_row = obj_row or name
            else:
                row_index[name] = prog.add_row(name, {}, kind, 0.0)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            name = tok[0]
            if name not in col_index:
                col_index[name] = prog.add_var(name, 0.0, np.inf, integer=in_int)
            j = col_index[name]
            for r, v in zip(tok[1::2], tok[2::2]):
                if r == obj_row:
                    prog.obj[j] = float(v)
                else:
                    prog.rows[row_index[r]][j] = float(v)
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                if r == obj_row:
                    continue
                prog.rhs[row_index[r]] = float(v)
        elif section == "BOUNDS":
            kind, name = tok[0], tok[2]
            j = col_index[name]
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "UP":
                prog.ub[j] = val
            elif kind == "LO":
                prog.lb[j] = val
            elif kind == "FX":
                prog.lb[j] = prog.ub[j] = val
            elif kind == "MI":
                prog.lb[j] = -np.inf
            elif kind == "PL":
                prog.ub[j] = np.inf
            elif kind == "BV":
                prog.lb[j], prog.ub[j] = 0.0, 1.0
                prog.integer[j] = True
            elif kind == "FR":
                prog.lb[j], prog.ub[j] = -np.inf, np.inf
            else:
                raise ModelFormatError(f"unsupported bound type {kind!r}")
        elif section is None:
            raise ModelFormatError("data before the first section header")
    if prog.sense not in ("max", "min"):
        raise ModelFormatError(f"bad objective sense {prog.sense!r}")
    return prog


def read_mps(path) -> MixedIntegerProgram:
    return parse_mps(Path(path).read_text())


# ---------------------------------------------------------------- LP text

_SENSE_SYM = {"L": "<=", "G": ">=", "E": "="}
_SYM_SENSE = {"<=": "L", "=<": "L", "<": "L", ">=": "G", "=>": "G", ">": "G", "=": "E"}


def _expr(terms) -> str:
    parts = []
    for coef, name in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {format_number(abs(coef), 24)} {name}")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def lp_text(prog: MixedIntegerProgram) -> str:
    names = prog.var_names
    out = [f"\\ {prog.name}", "Maximize" if prog.sense == "max" else "Minimize"]
    obj_terms = [(c, names[j]) for j, c in enumerate(prog.obj) if c != 0.0]
    out.append(f" obj: {_expr(obj_terms)}")
    out.append("Subject To")
    for name, row, s, b in zip(prog.row_names, prog.rows, prog.row_sense, prog.rhs):
        terms = [(row[j], names[j]) for j in sorted(row)]
        out.append(f" {name}: {_expr(terms)} {_SENSE_SYM[s]} {format_number(b, 24)}")
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = prog.lb[j], prog.ub[j]
        if lo == hi:
            out.append(f" {name} = {format_number(lo, 24)}")
        elif math.isinf(lo) and math.isinf(hi):
            out.append(f" {name} free")
        elif math.isinf(lo):
            out.append(f" -inf <= {name} <= {format_number(hi, 24)}")
        elif math.isfinite(hi):
            out.append(f" {format_number(lo, 24)} <= {name} <= {format_number(hi, 24)}")
        elif lo != 0.0:
            out.append(f" {name} >= {format_number(lo, 24)}")
    ints = [n for n, i in zip(names, prog.integer) if i]
    if ints:
        out.append("Generals")
        for k in range(0, len(ints), 8):
            out.append(" " + " ".join(ints[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(prog: MixedIntegerProgram, path) -> None:
    Path(path).write_text(lp_text(prog))


_TERM = re.compile(r"([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.]*)")


def _parse_expr(s: str) -> list[tuple[float, str]]:
    s = s.strip()
    if s == "0":
        return []
    terms = []
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m:
            raise ModelFormatError(f"cannot parse expression near {s[pos:]!r}")
        sign, num, name = m.groups()
        coef = float(num) if num else 1.0
        terms.append((-coef if sign == "-" else coef, name))
        pos = m.end()
        while pos < len(s) and s[pos] == " ":
            pos += 1
    return terms


def parse_lp(text: str) -> MixedIntegerProgram:
    """Read the LP-text subset produced by :func:`lp_text`."""
    prog = MixedIntegerProgram()
    cols: dict[str, int] = {}

    def col(name: str) -> int:
        if name not in cols:
            cols[name] = prog.add_var(name)
        return cols[name]

    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            prog.name = line[1:].strip() or prog.name
            continue
        low = line.lower()
        if low in ("maximize", "maximise", "max"):
            section, prog.sense = "obj", "max"
            continue
        if low in ("minimize", "minimise", "min"):
            section, prog.sense = "obj", "min"
            continue
        if low in ("subject to", "st", "s.t."):
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("generals", "general", "binaries", "binary"):
            section = low
            continue
        if low == "end":
            break
        if section == "obj":
            _, expr = line.split(":", 1)
            for coef, name in _parse_expr(expr):
                prog.obj[col(name)] += coef
        elif section == "rows":
            name, body = line.split(":", 1)
            m = re.match(r"(.*?)\s*(<=|>=|=<|=>|=|<|>)\s*(\S+)$", body.strip())
            if not m:
                raise ModelFormatError(f"bad constraint {line!r}")
            coeffs: dict[int, float] = {}
            for coef, v in _parse_expr(m.group(1)):
                j = col(v)
                coeffs[j] = coeffs.get(j, 0.0) + coef
            prog.add_row(name.strip(), coeffs, _SYM_SENSE[m.group(2)], float(m.group(3)))
        elif section == "bounds":
            tok = line.split()
            if len(tok) == 2 and tok[1].lower() == "free":
                j = col(tok[0])
                prog.lb[j], prog.ub[j] = -np.inf, np.inf
            elif len(tok) == 5:
                j = col(tok[2])
                prog.lb[j], prog.ub[j] = float(tok[0]), float(tok[4])
            elif len(tok) == 3:
                j = col(tok[0])
                v = float(tok[2])
                if tok[1] == "=":
                    prog.lb[j] = prog.ub[j] = v
                elif tok[1] in (">=", "=>"):
                    prog.lb[j] = v
                else:
                    prog.ub[j] = v
            else:
                raise ModelFormatError(f"bad bound {line!r}")
        elif section in ("generals", "general"):
            for name in line.split():
                prog.integer[col(name)] = True
        elif section in ("binaries", "binary"):
            for name in line.split():
                j = col(name)
                prog.integer[j] = True
                prog.lb[j], prog.ub[j] = 0.0, 1.0
    return prog


def read_lp(path) -> MixedIntegerProgram:
    return parse_lp(Path(path).read_text())


def export_model(prog: MixedIntegerProgram, path, fmt: str = "mps") -> None:
    if fmt == "mps":
        write_mps(prog, path)
    elif fmt == "lp_text":
        write_lp(prog, path)
    else:
        raise ValueError(f"format must be 'mps' or 'lp_text', got {fmt!r}")
