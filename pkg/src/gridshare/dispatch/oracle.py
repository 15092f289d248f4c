"""Exhaustive min-max oracle for tiny instances.

For every connection pattern ``u`` the robust problem is written in
extensive form over all vertices of ``W(u)`` (the recourse value is convex
in ``w``, so its maximum sits at a vertex) and solved as one MILP.  Nothing
here is shared with the C&CG masters beyond the compact matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from ..errors import TooLarge
from ..model import MicrogridCase
from ..solver import EQ, GE, LE
from ..uncertainty import enumerate_vertices, vertex_to_scenario
from .compact import CompactModel, assemble_compact
from .plan import DayAheadPlan

MAX_BITS = 12


@dataclass
class OracleResult:
    objective: float
    u: np.ndarray | None
    plan: DayAheadPlan | None
    per_u: dict


def _row_bounds(senses: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.where((senses == GE) | (senses == EQ), b, -np.inf)
    hi = np.where((senses == LE) | (senses == EQ), b, np.inf)
    return lo, hi


def extensive_value(cm: CompactModel, u: np.ndarray, scenarios: list) -> tuple[float, np.ndarray | None]:
    """min over x with fixed ``u`` of first-stage cost plus the worst listed recourse cost."""
    nx, ny = cm.nx, cm.ny
    S = len(scenarios)
    n = nx + 1 + S * ny
    c = np.zeros(n)
    c[:nx] = cm.gamma
    c[nx] = 1.0
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[:nx], ub[:nx] = cm.x_lb, cm.x_ub
    uc = cm.u_cols
    lb[uc] = ub[uc] = np.asarray(u, dtype=float).ravel()
    integ = np.zeros(n)
    integ[:nx] = cm.x_int
    blocks = [sp.hstack([cm.A, sp.csr_matrix((cm.A.shape[0], n - nx))])]
    los, his = [], []
    lo, hi = _row_bounds(cm.a_senses, cm.e)
    los.append(lo)
    his.append(hi)
    for i, w in enumerate(scenarios):
        off = nx + 1 + i * ny
        blocks.append(sp.hstack([cm.C, sp.csr_matrix((cm.m, off - nx)), cm.H, sp.csr_matrix((cm.m, n - off - ny))]))
        lo, hi = _row_bounds(cm.senses, cm.h - cm.T @ np.asarray(w, dtype=float).ravel())
        los.append(lo)
        his.append(hi)
        r = sp.lil_matrix((1, n))
        r[0, nx] = 1.0
        r[0, off:off + ny] = -cm.rho
        blocks.append(r.tocsr())
        los.append(np.zeros(1))
        his.append(np.full(1, np.inf))
    A = sp.vstack(blocks, format="csr")
    res = milp(c, constraints=LinearConstraint(A, np.concatenate(los), np.concatenate(his)),
               integrality=integ, bounds=Bounds(lb, ub), options={"mip_rel_gap": 1e-10})
    if res.status != 0 or res.x is None:
        return float("inf"), None
    return float(res.fun) + cm.const, res.x[:nx]


def brute_force_minmax(case: MicrogridCase, M: int | None = None, compact: CompactModel | None = None) -> OracleResult:
    """Enumerate every ``u`` and every vertex of ``W(u)``."""
    cm = compact or assemble_compact(case, M)
    bits = case.J * case.T
    if bits > MAX_BITS:
        raise TooLarge(f"{bits} connection bits exceed the oracle guard of {MAX_BITS}")
    best = OracleResult(float("inf"), None, None, {})
    for pattern in itertools.product((0.0, 1.0), repeat=bits):
        u = np.array(pattern).reshape(case.J, case.T)
        scen = [vertex_to_scenario(case, u, v) for v in enumerate_vertices(case, u)]
        val, x = extensive_value(cm, u, scen)
        best.per_u[pattern] = val
        if val < best.objective:
            best.objective, best.u, best.plan = val, u, cm.plan_from_x(x)
    return best
