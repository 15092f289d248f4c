"""Fixed-column MPS export (and a matching reader for round-trip checks).

Layout follows the classic fixed format: field 1 in columns 2-3, field 2
in 5-12, field 3 in 15-22, field 4 in 25-36, field 5 in 40-47, field 6 in
50-61.  Names are generated as ``C0000001`` / ``R0000001`` so that they fit
the 8-character fields; the original names are listed in ``*`` comment
lines at the top.  Integer columns are bracketed by MARKER lines, and
quadratic terms go to a QUADOBJ section holding the diagonal of the
Hessian (``2 q_j`` for an objective term ``q_j x_j^2``).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .program import EQ, GE, LE, MathProgram

_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}
_CODE_SENSE = {"L": LE, "G": GE, "E": EQ}


def _num(v: float) -> str:
    """Shortest repr of ``v`` fitting 12 characters."""
    v = float(v)
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    for digits in range(12, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= 12:
            return s
    return f"{v:.5e}"


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def to_mps(p: MathProgram) -> str:
    cn = [f"C{j + 1:07d}" for j in range(p.n)]
    rn = [f"R{i + 1:07d}" for i in range(p.m)]
    out = [f"* generated by gridshare; original names follow"]
    for j, c in enumerate(cn):
        out.append(f"* {c} {p.var_names[j] if p.var_names else ''}".rstrip())
    for i, r in enumerate(rn):
        out.append(f"* {r} {p.row_names[i] if p.row_names else ''}".rstrip())
    if p.obj_const:
        out.append(f"* OBJCONST {_num(p.obj_const)}")
    out.append(f"NAME          {p.name[:8].upper() or 'PROGRAM'}")
    out.append("ROWS")
    out.append(_line("N", "COST"))
    for i, r in enumerate(rn):
        out.append(_line(_SENSE_CODE[int(p.senses[i])], r))
    out.append("COLUMNS")
    A = sp.csc_matrix(p.A)
    in_int = False
    marker = 0
    for j, c in enumerate(cn):
        if p.integer[j] and not in_int:
            out.append(_line("", f"MARKER{marker:02d}", "'MARKER'", "", "'INTORG'"))
            in_int = True
        elif not p.integer[j] and in_int:
            out.append(_line("", f"MARKER{marker:02d}", "'MARKER'", "", "'INTEND'"))
            in_int = False
            marker += 1
        entries = []
        if p.c[j] != 0.0:
            entries.append(("COST", p.c[j]))
        col = A.getcol(j)
        for i, v in zip(col.indices, col.data):
            entries.append((rn[i], v))
        if not entries:
            entries.append(("COST", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", c, pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
            else:
                out.append(_line("", c, pair[0][0], _num(pair[0][1])))
    if in_int:
        out.append(_line("", f"MARKER{marker:02d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    for i, r in enumerate(rn):
        if p.b[i] != 0.0:
            out.append(_line("", "RHS", r, _num(p.b[i])))
    out.append("BOUNDS")
    for j, c in enumerate(cn):
        lo, hi = p.lb[j], p.ub[j]
        if lo == hi:
            out.append(_line("FX", "BND", c, _num(lo)))
            continue
        if not np.isfinite(lo) and not np.isfinite(hi):
            out.append(_line("FR", "BND", c))
            continue
        if not np.isfinite(lo):
            out.append(_line("MI", "BND", c))
        elif lo != 0.0:
            out.append(_line("LO", "BND", c, _num(lo)))
        if np.isfinite(hi):
            out.append(_line("UP", "BND", c, _num(hi)))
    if p.has_quadratic:
        out.append("QUADOBJ")
        for j, c in enumerate(cn):
            if p.qdiag[j] != 0.0:
                out.append(_line("", c, c, _num(2.0 * p.qdiag[j])))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(p: MathProgram, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_mps(p))


def _fields(line: str) -> list[str]:
    cols = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)]
    return [line[a:b].strip() for a, b in cols]


def read_mps(text: str) -> MathProgram:
    """Parse the subset of fixed MPS written by :func:`to_mps`."""
    from .program import ProgramBuilder

    section = None
    rows: dict[str, int] = {}
    senses: list[int] = []
    cols: dict[str, int] = {}
    entries: dict[str, list[tuple[str, float]]] = {}
    integer: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    quad: dict[str, float] = {}
    const = 0.0
    in_int = False
    for raw in text.splitlines():
        if raw.startswith("* OBJCONST"):
            const = float(raw.split()[2])
            continue
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = _fields(raw)
        if section == "ROWS":
            if f[0] != "N":
                rows[f[1]] = len(rows)
                senses.append(_CODE_SENSE[f[0]])
        elif section == "COLUMNS":
            if f[2] == "'MARKER'":
                in_int = f[4] == "'INTORG'"
                continue
            if f[1] not in cols:
                cols[f[1]] = len(cols)
                entries[f[1]] = []
                integer[f[1]] = in_int
                bounds[f[1]] = [0.0, np.inf]
            entries[f[1]].append((f[2], float(f[3])))
            if f[4]:
                entries[f[1]].append((f[4], float(f[5])))
        elif section == "RHS":
            rhs[f[2]] = float(f[3])
            if f[4]:
                rhs[f[4]] = float(f[5])
        elif section == "BOUNDS":
            kind, name = f[0], f[2]
            b = bounds[name]
            if kind == "FX":
                b[0] = b[1] = float(f[3])
            elif kind == "FR":
                b[0], b[1] = -np.inf, np.inf
            elif kind == "MI":
                b[0] = -np.inf
            elif kind == "LO":
                b[0] = float(f[3])
            elif kind == "UP":
                b[1] = float(f[3])
        elif section == "QUADOBJ":
            quad[f[1]] = float(f[3]) / 2.0
    bld = ProgramBuilder()
    for name, j in cols.items():
        cost = sum(v for r, v in entries[name] if r == "COST")
        bld.add_var(name, bounds[name][0], bounds[name][1], cost, integer[name], quad.get(name, 0.0))
    per_row: list[list[tuple[int, float]]] = [[] for _ in rows]
    for name, j in cols.items():
        for r, v in entries[name]:
            if r != "COST":
                per_row[rows[r]].append((j, v))
    for rname, i in rows.items():
        bld.add_row(per_row[i], senses[i], rhs.get(rname, 0.0), rname)
    bld.obj_const = const
    return bld.build()
