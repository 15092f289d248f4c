"""Optional backend delegating LPs and MILPs to HiGHS through scipy.

scipy reports ``marginals`` as sensitivities of the optimum to the
right-hand sides, which is the package's dual convention, so no sign
flipping is needed beyond mapping ``>=`` rows (passed as negated ``<=``).
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .program import EQ, GE, LE, MathProgram, ProgramSolution, SolverConfig, Status

_LINPROG_STATUS = {0: Status.OPTIMAL, 1: Status.ITER_LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}


def highs_lp(p: MathProgram, cfg: SolverConfig | None = None) -> ProgramSolution:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    A = sp.csr_matrix(p.A)
    le = p.senses == LE
    ge = p.senses == GE
    eq = p.senses == EQ
    iq = np.flatnonzero(le | ge)
    sign = np.where(ge[iq], -1.0, 1.0)
    A_ub = sp.diags(sign) @ A[iq] if iq.size else None
    b_ub = sign * p.b[iq] if iq.size else None
    ie = np.flatnonzero(eq)
    A_eq = A[ie] if ie.size else None
    b_eq = p.b[ie] if ie.size else None
    bounds = np.column_stack([p.lb, p.ub]) if p.n else None
    opts = {"primal_feasibility_tolerance": cfg.feas_tol, "dual_feasibility_tolerance": 1e-9}
    if cfg.time_limit:
        opts["time_limit"] = cfg.time_limit
    res = linprog(p.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=opts)
    status = _LINPROG_STATUS.get(res.status, Status.ITER_LIMIT)
    stats = {"iterations": int(getattr(res, "nit", 0) or 0), "wall_time": time.perf_counter() - t0,
             "backend": "highs"}
    if status != Status.OPTIMAL:
        return ProgramSolution(status, stats=stats)
    y = np.zeros(p.m)
    if iq.size:
        y[iq] = sign * res.ineqlin.marginals
    if ie.size:
        y[ie] = res.eqlin.marginals
    x = np.asarray(res.x, dtype=float)
    rc = p.c - np.asarray(A.T @ y).ravel()
    return ProgramSolution(Status.OPTIMAL, objective=float(p.c @ x) + p.obj_const, x=x, duals=y,
                           reduced_costs=rc, stats=stats)


def highs_milp(p: MathProgram, cfg: SolverConfig | None = None) -> ProgramSolution:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if not p.has_integers:
        return highs_lp(p, cfg)
    A = sp.csr_matrix(p.A)
    lo = np.where(p.senses == LE, -np.inf, p.b)
    hi = np.where(p.senses == GE, np.inf, p.b)
    cons = [LinearConstraint(A, lo, hi)] if p.m else []
    opts = {"mip_rel_gap": max(cfg.mip_gap, 1e-9), "presolve": True}
    if cfg.time_limit:
        opts["time_limit"] = cfg.time_limit
    res = milp(p.c, constraints=cons, integrality=p.integer.astype(int), bounds=Bounds(p.lb, p.ub),
               options=opts)
    stats = {"nodes": int(getattr(res, "mip_node_count", 0) or 0), "wall_time": time.perf_counter() - t0,
             "backend": "highs"}
    if res.status == 0 and res.x is not None:
        x = np.asarray(res.x, dtype=float)
        x[p.integer] = np.round(x[p.integer])
        return ProgramSolution(Status.OPTIMAL, objective=p.objective(x), x=x, stats=stats)
    if res.status == 2:
        return ProgramSolution(Status.INFEASIBLE, stats=stats)
    if res.status == 3:
        return ProgramSolution(Status.UNBOUNDED, stats=stats)
    if res.status == 4 and "infeasible or unbounded" in str(res.message).lower():
        probe = highs_lp(p.relaxed(), cfg)
        return ProgramSolution(probe.status if probe.status != Status.OPTIMAL else Status.INFEASIBLE, stats=stats)
    return ProgramSolution(Status.ITER_LIMIT, stats=stats)
