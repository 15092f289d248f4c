"""Master problems over a pool of scenarios.

Three ways of letting a pooled scenario act on the recourse rows:

``projection``   ``T (u o w)``: linear in ``u`` because ``w`` is constant.
``raw``          ``T w``: the scenario is taken as is, whatever ``u`` becomes.
``exogenous``    ``T omega`` with ``omega = u o w'`` written with big-M rows
                 (the decision-independent reformulation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import MasterInfeasible, SolverFailure
from ..solver import GE, LE, SolverConfig, Status, from_arrays, solve_milp
from .compact import CompactModel
from .plan import DayAheadPlan
from .subproblem import HIGHS

MODES = ("projection", "raw", "exogenous")


@dataclass
class MasterResult:
    x: np.ndarray
    plan: DayAheadPlan
    lower_bound: float
    tau: float
    n_uncertainty_vars: int
    stats: dict


def solve_master(cm: CompactModel, pool: list, mode: str = "projection", config: SolverConfig | None = None,
                 fix_u: np.ndarray | None = None) -> MasterResult:
    """Minimize first-stage cost plus the worst pooled recourse cost.

    ``pool`` holds ``J x T`` scenarios; ``fix_u`` pins the connection bits.
    """
    if mode not in MODES:
        raise ValueError(f"unknown master mode {mode!r}")
    if not pool:
        raise ValueError("the scenario pool must not be empty")
    config = config or HIGHS
    case = cm.case
    nx, ny, nw, m = cm.nx, cm.ny, cm.nw, cm.m
    ucols = cm.u_cols
    S = len(pool)
    n_omega = nw if mode == "exogenous" else 0
    per = ny + n_omega
    n = nx + 1 + S * per
    tau = nx

    c = np.zeros(n)
    c[:nx] = cm.gamma
    c[tau] = 1.0
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[:nx], ub[:nx] = cm.x_lb, cm.x_ub
    if fix_u is not None:
        fu = np.asarray(fix_u, dtype=float).ravel()
        lb[ucols], ub[ucols] = fu, fu
    integer = np.zeros(n, dtype=bool)
    integer[:nx] = cm.x_int

    blocks = [sp.hstack([cm.A, sp.csr_matrix((cm.A.shape[0], n - nx))], format="csr")]
    senses = [cm.a_senses]
    rhs = [cm.e]
    _, hi = case.w_bounds()
    hi = hi.ravel()
    for i, w in enumerate(pool):
        w = np.asarray(w, dtype=float).ravel()
        off = nx + 1 + i * per
        Xpart = cm.C.tolil()
        b = cm.h.copy()
        if mode == "projection":
            Tu = cm.T @ sp.diags(w)
            Xpart[:, ucols] = Xpart[:, ucols] + Tu
        elif mode == "raw":
            b = b - cm.T @ w
        Xpart = Xpart.tocsr()
        row = [Xpart, sp.csr_matrix((m, 1 + i * per)), cm.H]
        if n_omega:
            row.append(cm.T)
        row.append(sp.csr_matrix((m, n - off - ny - n_omega)))
        blocks.append(sp.hstack(row, format="csr"))
        senses.append(cm.senses)
        rhs.append(b)
        # tau >= rho'y
        r = np.zeros(n)
        r[tau] = 1.0
        r[off:off + ny] = -cm.rho
        blocks.append(sp.csr_matrix(r))
        senses.append(np.array([GE]))
        rhs.append(np.zeros(1))
        if n_omega:
            o = off + ny
            lb[o:o + nw] = 0.0
            ub[o:o + nw] = np.maximum(w, 0.0)   # omega <= w'
            # omega <= W_hi*u ; omega >= w' - W_hi*(1 - u)
            Iw = sp.identity(nw, format="csr")
            U = sp.csr_matrix((np.ones(nw), (np.arange(nw), ucols)), shape=(nw, nx))
            Om = sp.csr_matrix((np.ones(nw), (np.arange(nw), o - nx + np.arange(nw))), shape=(nw, n - nx))
            link = sp.hstack([-(sp.diags(hi) @ U), Om], format="csr")
            blocks.append(link)
            senses.append(np.full(nw, LE))
            rhs.append(np.zeros(nw))
            blocks.append(link)
            senses.append(np.full(nw, GE))
            rhs.append(w - hi)
    A = sp.vstack(blocks, format="csr")
    prog = from_arrays(c, A, np.concatenate(senses), np.concatenate(rhs), lb, ub, integer,
                       obj_const=cm.const, name=f"master_{mode}")
    sol = solve_milp(prog, config)
    if sol.status == Status.INFEASIBLE:
        raise MasterInfeasible(f"master problem over {S} pooled scenarios is infeasible")
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"master problem returned {sol.status.value}")
    x = sol.x[:nx].copy()
    x[cm.x_int] = np.round(x[cm.x_int])
    return MasterResult(x, cm.plan_from_x(x), sol.objective, float(sol.x[tau]), S * n_omega,
                        dict(sol.stats, n=n, m=A.shape[0]))
