"""Compact linear form of the robust dispatch model.

First stage (``x`` includes the connection bits ``u``)::

    min gamma'x + const   s.t.  A x (sense) e,  binaries on u, h, mu_c, mu_d

Recourse for every period, with all constant bounds turned into rows::

    min rho'y   s.t.  H y + C x + T w (sense) h,   sense in {>=, =}

``w`` is the flattened ``J x T`` scenario (slot ``j*T + t``) and
``rho'y`` is the sum of the disutility epigraph variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import DegenerateRange
from ..model import MicrogridCase
from ..network import Tree, recourse_rows
from ..solver import EQ, GE, LE, MathProgram, from_arrays
from .plan import PLAN_FIELDS, DayAheadPlan
from .pwl import linearize_disutility

BINARY_FIELDS = ("u", "h", "mu_c", "mu_d")


class _Rows:
    """Sparse row accumulator over (y, x, w) column spaces."""

    def __init__(self):
        self.trip = {"y": ([], [], []), "x": ([], [], []), "w": ([], [], [])}
        self.senses: list[int] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, y: dict, x: dict, w: dict, sense: int, rhs: float, name: str) -> None:
        i = len(self.rhs)
        sign = 1.0
        if sense == LE:
            sign, sense = -1.0, GE
        for part, coeffs in (("y", y), ("x", x), ("w", w)):
            r, c, v = self.trip[part]
            for j, val in coeffs.items():
                if val != 0.0:
                    r.append(i)
                    c.append(j)
                    v.append(sign * val)
        self.senses.append(sense)
        self.rhs.append(sign * rhs)
        self.names.append(name)

    def matrix(self, part: str, ncols: int) -> sp.csr_matrix:
        r, c, v = self.trip[part]
        return sp.csr_matrix((v, (r, c)), shape=(len(self.rhs), ncols))


@dataclass
class CompactModel:
    case: MicrogridCase
    M: int
    x_keys: list
    x_index: dict
    x_lb: np.ndarray
    x_ub: np.ndarray
    x_int: np.ndarray
    gamma: np.ndarray
    const: float
    A: sp.csr_matrix
    a_senses: np.ndarray
    e: np.ndarray
    a_names: list
    y_keys: list
    y_index: dict
    rho: np.ndarray
    H: sp.csr_matrix
    C: sp.csr_matrix
    T: sp.csr_matrix
    h: np.ndarray
    senses: np.ndarray
    row_names: list
    pwl_error: float
    row_slices: list
    y_slices: list

    @property
    def nx(self) -> int:
        return len(self.x_keys)

    @property
    def ny(self) -> int:
        return len(self.y_keys)

    @property
    def m(self) -> int:
        return len(self.h)

    @property
    def nw(self) -> int:
        return self.case.J * self.case.T

    @property
    def u_cols(self) -> np.ndarray:
        """x columns of the connection bits in slot order."""
        J, T = self.case.J, self.case.T
        return np.array([self.x_index[("u", j, t)] for j in range(J) for t in range(T)], dtype=int)

    def census(self) -> dict:
        counts: dict = {}
        for nm in self.row_names:
            kind = nm.split("[")[0]
            counts[kind] = counts.get(kind, 0) + 1
        return counts

    # x <-> plan ----------------------------------------------------------
    def plan_from_x(self, x: np.ndarray) -> DayAheadPlan:
        plan = DayAheadPlan.zeros(self.case)
        for (nm, i, t), j in self.x_index.items():
            val = float(x[j])
            if nm in BINARY_FIELDS:
                val = float(round(val))
            getattr(plan, nm)[i, t] = val
        return plan

    def x_from_plan(self, plan: DayAheadPlan) -> np.ndarray:
        plan.check_shape(self.case)
        x = np.zeros(self.nx)
        for (nm, i, t), j in self.x_index.items():
            x[j] = getattr(plan, nm)[i, t]
        return x

    def first_stage_cost(self, x: np.ndarray) -> float:
        return float(self.gamma @ x) + self.const

    def cost_breakdown(self, x: np.ndarray) -> dict:
        u = x[self.u_cols]
        alpha = self.case.alpha().ravel()
        pen = float(alpha @ (1.0 - u))
        return {"penalty": pen, "gas": self.first_stage_cost(x) - pen}

    # recourse evaluation ---------------------------------------------------
    def recourse_rhs(self, x: np.ndarray, w) -> np.ndarray:
        w = np.asarray(w, dtype=float).ravel()
        return self.h - self.C @ x - self.T @ w

    def period_program(self, t: int, rhs: np.ndarray) -> MathProgram:
        """Recourse LP of period ``t`` given the full right-hand side ``h - Cx - Tw``."""
        rs, ys = self.row_slices[t], self.y_slices[t]
        n = ys.stop - ys.start
        return from_arrays(self.rho[ys], self.H[rs, ys], self.senses[rs], rhs[rs], np.full(n, -np.inf),
                           np.full(n, np.inf), name=f"recourse_t{t + 1}")

    def recourse_program(self, x: np.ndarray, w, slack: bool = False) -> MathProgram:
        """Recourse LP at fixed ``(x, w)``; with ``slack`` every row gets penalized slacks."""
        b = self.recourse_rhs(x, w)
        n = self.ny
        if not slack:
            return from_arrays(self.rho, self.H, self.senses, b, np.full(n, -np.inf), np.full(n, np.inf),
                               name="recourse")
        m = self.m
        eq = self.senses == EQ
        neq = int(eq.sum())
        Sp = sp.identity(m, format="csr")
        Sm = sp.csr_matrix((-np.ones(neq), (np.flatnonzero(eq), np.arange(neq))), shape=(m, neq))
        A = sp.hstack([self.H, Sp, Sm], format="csr")
        c = np.concatenate([np.zeros(n), np.ones(m + neq)])
        lb = np.concatenate([np.full(n, -np.inf), np.zeros(m + neq)])
        ub = np.full(n + m + neq, np.inf)
        return from_arrays(c, A, self.senses, b, lb, ub, name="recourse_slack")


def _x_layout(case: MicrogridCase):
    T = case.T
    sizes = {"prosumer": case.J, "gas": len(case.gas_units), "storage": len(case.storages)}
    keys = []
    for nm, fam in PLAN_FIELDS.items():
        for i in range(sizes[fam]):
            for t in range(T):
                keys.append((nm, i, t))
    index = {k: j for j, k in enumerate(keys)}
    n = len(keys)
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    integer = np.zeros(n, dtype=bool)
    for j, (nm, i, t) in enumerate(keys):
        if nm in BINARY_FIELDS:
            lb[j], ub[j], integer[j] = 0.0, 1.0, True
        elif nm in ("P", "r", "pcl", "pch", "pdl", "pdh"):
            lb[j] = 0.0
    return keys, index, lb, ub, integer


def _first_stage_rows(case: MicrogridCase, xi: dict):
    """Gas box, storage status, envelopes and SOC recursion."""
    rows = _Rows()
    T, dt = case.T, case.step
    for g, gu in enumerate(case.gas_units):
        for t in range(T):
            h, P, r, Q = xi[("h", g, t)], xi[("P", g, t)], xi[("r", g, t)], xi[("Q", g, t)]
            if case.strict_reserve:
                rows.add({}, {P: 1.0, r: -1.0, h: -gu.p_min}, {}, GE, 0.0, f"gas_lo[{g},{t}]")
                rows.add({}, {P: 1.0, r: 1.0, h: -gu.p_max}, {}, LE, 0.0, f"gas_hi[{g},{t}]")
            else:
                rows.add({}, {P: 1.0, r: 1.0, h: -gu.p_min}, {}, GE, 0.0, f"gas_lo[{g},{t}]")
                rows.add({}, {P: 1.0, r: -1.0, h: -gu.p_max}, {}, LE, 0.0, f"gas_hi[{g},{t}]")
            rows.add({}, {Q: 1.0, h: -gu.q_min}, {}, GE, 0.0, f"gas_q_lo[{g},{t}]")
            rows.add({}, {Q: 1.0, h: -gu.q_max}, {}, LE, 0.0, f"gas_q_hi[{g},{t}]")
    for e, st in enumerate(case.storages):
        for t in range(T):
            k = {nm: xi[(nm, e, t)] for nm in ("mu_c", "mu_d", "pcl", "pch", "pdl", "pdh", "El", "Eh")}
            rows.add({}, {k["mu_c"]: 1.0, k["mu_d"]: 1.0}, {}, LE, 1.0, f"status[{e},{t}]")
            rows.add({}, {k["pcl"]: 1.0, k["mu_c"]: -st.pc_min}, {}, GE, 0.0, f"pc_env_lo[{e},{t}]")
            rows.add({}, {k["pch"]: 1.0, k["pcl"]: -1.0}, {}, GE, 0.0, f"pc_env_order[{e},{t}]")
            rows.add({}, {k["pch"]: 1.0, k["mu_c"]: -st.pc_max}, {}, LE, 0.0, f"pc_env_hi[{e},{t}]")
            rows.add({}, {k["pdl"]: 1.0, k["mu_d"]: -st.pd_min}, {}, GE, 0.0, f"pd_env_lo[{e},{t}]")
            rows.add({}, {k["pdh"]: 1.0, k["pdl"]: -1.0}, {}, GE, 0.0, f"pd_env_order[{e},{t}]")
            rows.add({}, {k["pdh"]: 1.0, k["mu_d"]: -st.pd_max}, {}, LE, 0.0, f"pd_env_hi[{e},{t}]")
            # E_t - E_{t-1} - (p eta_c - p'/eta_d) dt = 0
            lo = {k["El"]: 1.0, k["pcl"]: -st.eta_c * dt, k["pdh"]: dt / st.eta_d}
            hi = {k["Eh"]: 1.0, k["pch"]: -st.eta_c * dt, k["pdl"]: dt / st.eta_d}
            if t == 0:
                rows.add({}, lo, {}, EQ, st.e0, f"soc_lo[{e},{t}]")
                rows.add({}, hi, {}, EQ, st.e0, f"soc_hi[{e},{t}]")
            else:
                lo[xi[("El", e, t - 1)]] = -1.0
                hi[xi[("Eh", e, t - 1)]] = -1.0
                rows.add({}, lo, {}, EQ, 0.0, f"soc_lo[{e},{t}]")
                rows.add({}, hi, {}, EQ, 0.0, f"soc_hi[{e},{t}]")
            rows.add({}, {k["El"]: 1.0}, {}, GE, st.e_min, f"soc_min[{e},{t}]")
            rows.add({}, {k["Eh"]: 1.0, k["El"]: -1.0}, {}, GE, 0.0, f"soc_order[{e},{t}]")
            rows.add({}, {k["Eh"]: 1.0}, {}, LE, st.e_max, f"soc_max[{e},{t}]")
        last = T - 1
        rows.add({}, {xi[("El", e, last)]: 1.0}, {}, GE, st.e0 - st.delta_e, f"terminal_lo[{e}]")
        rows.add({}, {xi[("Eh", e, last)]: 1.0}, {}, LE, st.e0 + st.delta_e, f"terminal_hi[{e}]")
    return rows


def assemble_compact(case: MicrogridCase, M: int | None = None) -> CompactModel:
    """Build the compact matrices with ``M`` PWL sample points per customer and period."""
    M = case.pwl_points if M is None else int(M)
    T = case.T
    x_keys, xi, x_lb, x_ub, x_int = _x_layout(case)
    nx = len(x_keys)

    gamma = np.zeros(nx)
    for g, gu in enumerate(case.gas_units):
        for t in range(T):
            gamma[xi[("P", g, t)]] = gu.c
            gamma[xi[("r", g, t)]] = gu.s
    alpha = case.alpha()
    for j in range(case.J):
        for t in range(T):
            gamma[xi[("u", j, t)]] = -alpha[j, t]
    const = float(alpha.sum())

    fs = _first_stage_rows(case, xi)
    A = fs.matrix("x", nx)

    tree = Tree.build(case)
    y_keys: list = []
    yi: dict = {}

    def ycol(key):
        if key not in yi:
            yi[key] = len(y_keys)
            y_keys.append(key)
        return yi[key]

    rows = _Rows()
    slot = {k: j for j, k in enumerate(case.prosumers)}
    pwl_error = 0.0
    row_slices, y_slices = [], []
    for t in range(T):
        r0, y0 = len(rows.rhs), len(y_keys)
        blk = recourse_rows(case, t, tree)
        for key in blk.y_bounds:
            ycol(key)
        for r in blk.rows:
            rows.add({ycol(k): c for k, c in r.y.items()}, {xi[k]: c for k, c in r.x.items()}, {},
                     r.sense, r.rhs, r.name)
        for key, (lo, hi) in blk.y_bounds.items():
            j = yi[key]
            tag = f"{key[0]},{key[1]},{t}"
            if lo == hi:
                rows.add({j: 1.0}, {}, {}, EQ, lo, f"fix[{tag}]")
                continue
            if np.isfinite(lo):
                rows.add({j: 1.0}, {}, {}, GE, lo, f"bound_lo[{tag}]")
            if np.isfinite(hi):
                rows.add({j: 1.0}, {}, {}, LE, hi, f"bound_hi[{tag}]")
        for k, c in enumerate(case.customers):
            d, s, q = ycol(("d", k, t)), ycol(("sigma", k, t)), ycol(("q", k, t))
            w = {slot[k] * T + t: 1.0} if k in slot else {}
            # q - d + w = d_fixed
            rows.add({q: 1.0, d: -1.0}, {}, w, EQ, c.d_fixed[t], f"share_balance[{k},{t}]")
            rows.add({d: 1.0}, {}, {}, GE, c.d_lo[t], f"demand_lo[{k},{t}]")
            rows.add({d: 1.0}, {}, {}, LE, c.d_hi[t], f"demand_hi[{k},{t}]")
            try:
                pw = linearize_disutility(c, t, M)
            except DegenerateRange as exc:
                rows.add({s: 1.0}, {}, {}, GE, exc.value, f"pwl[{k},{t},0]")
                continue
            pwl_error += pw.error_bound
            for mseg, (kap, nu) in enumerate(zip(pw.kappa, pw.nu)):
                rows.add({s: 1.0, d: -kap}, {}, {}, GE, nu, f"pwl[{k},{t},{mseg}]")
        # every row and column of period t is contiguous
        row_slices.append(slice(r0, len(rows.rhs)))
        y_slices.append(slice(y0, len(y_keys)))

    ny = len(y_keys)
    rho = np.zeros(ny)
    for key, j in yi.items():
        if key[0] == "sigma":
            rho[j] = 1.0
    return CompactModel(
        case=case, M=M, x_keys=x_keys, x_index=xi, x_lb=x_lb, x_ub=x_ub, x_int=x_int, gamma=gamma,
        const=const, A=A, a_senses=np.array(fs.senses, dtype=np.int8), e=np.array(fs.rhs), a_names=fs.names,
        y_keys=y_keys, y_index=yi, rho=rho, H=rows.matrix("y", ny), C=rows.matrix("x", nx),
        T=rows.matrix("w", case.J * T), h=np.array(rows.rhs), senses=np.array(rows.senses, dtype=np.int8),
        row_names=rows.names, pwl_error=pwl_error, row_slices=row_slices, y_slices=y_slices,
    )


def analytic_census(case: MicrogridCase, M: int | None = None) -> dict:
    """Expected recourse row counts from the case dimensions alone."""
    M = case.pwl_points if M is None else int(M)
    T = case.T
    B, L, G, E, K = len(case.buses), len(case.lines), len(case.gas_units), len(case.storages), len(case.customers)
    seg = sum(1 if c.d_lo[t] >= c.d_hi[t] else M - 1 for c in case.customers for t in range(T))
    return {
        "reserve_lo": G * T, "reserve_hi": G * T,
        "charge_lo": E * T, "charge_hi": E * T, "discharge_lo": E * T, "discharge_hi": E * T,
        "balance_p": B * T, "balance_q": B * T,
        "flow_p": L * T, "flow_q": L * T,
        "closure_p": T, "closure_q": T,
        "voltage": L * T,
        "fix": T,                              # root voltage
        "bound_lo": (2 * L + (B - 1)) * T,     # line flows and voltages
        "bound_hi": (2 * L + (B - 1)) * T,
        "share_balance": K * T, "demand_lo": K * T, "demand_hi": K * T,
        "pwl": seg,
    }
