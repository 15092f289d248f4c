"""Primal active-set method for separable convex quadratic programs.

Objective: ``sum_j q_j x_j^2 + c^T x + const`` with ``q >= 0``.  Every row
and finite bound is rewritten as ``g^T x >= h`` (or ``==``).  The method
starts from a phase-1 vertex of the native simplex and keeps a linearly
independent working set; steps are computed in the null space of the
working set through an eigen-decomposition of the reduced Hessian, so
zero-curvature directions (linear variables) are handled as rays.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from ..errors import NotConvex
from .lp import simplex
from .program import EQ, GE, LE, MathProgram, ProgramSolution, SolverConfig, Status


def _null_space(A: np.ndarray, n: int, tol: float = 1e-10) -> np.ndarray:
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:].T


def active_set_qp(p: MathProgram, cfg: SolverConfig | None = None) -> ProgramSolution:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    q = p.qdiag if p.qdiag is not None else np.zeros(p.n)
    if np.any(q < 0):
        raise NotConvex("quadratic coefficients must be non-negative")
    n = p.n
    A = p.A.toarray()
    H = 2.0 * q

    # constraint list: rows then bounds, each as (g, h, is_eq, origin)
    G, hv, eq, origin = [], [], [], []
    for i in range(p.m):
        s = p.senses[i]
        if s == EQ:
            G.append(A[i]); hv.append(p.b[i]); eq.append(True)
        elif s == GE:
            G.append(A[i]); hv.append(p.b[i]); eq.append(False)
        else:
            G.append(-A[i]); hv.append(-p.b[i]); eq.append(False)
        origin.append(("row", i))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(p.lb[j]) and p.lb[j] == p.ub[j]:
            G.append(e); hv.append(p.lb[j]); eq.append(True); origin.append(("lb", j))
            continue
        if np.isfinite(p.lb[j]):
            G.append(e); hv.append(p.lb[j]); eq.append(False); origin.append(("lb", j))
        if np.isfinite(p.ub[j]):
            G.append(-e); hv.append(-p.ub[j]); eq.append(False); origin.append(("ub", j))
    G = np.array(G).reshape(-1, n)
    hv = np.array(hv)
    eq = np.array(eq, dtype=bool)
    nc = G.shape[0]

    start = simplex(replace(p, c=np.zeros(n), qdiag=None), cfg)
    if start.status == Status.INFEASIBLE:
        return ProgramSolution(Status.INFEASIBLE, farkas=start.farkas,
                               stats={"iterations": 0, "wall_time": time.perf_counter() - t0})
    if start.status != Status.OPTIMAL:
        return ProgramSolution(start.status, stats={"iterations": 0, "wall_time": time.perf_counter() - t0})
    x = start.x.copy()

    scale = max(1.0, float(np.max(np.abs(hv)))) if nc else 1.0
    act_tol = 1e-9 * scale
    # working set: all equalities, then active inequalities while independent
    W: list[int] = []

    def _try_add(i: int) -> bool:
        cand = G[W + [i]]
        if np.linalg.matrix_rank(cand, tol=1e-9) == len(W) + 1:
            W.append(i)
            return True
        return False

    for i in range(nc):
        if eq[i]:
            _try_add(i)
    for i in range(nc):
        if not eq[i] and abs(G[i] @ x - hv[i]) <= act_tol and len(W) < n:
            _try_add(i)

    gscale = max(1.0, float(np.max(np.abs(p.c))) if n else 1.0, float(np.max(H)) if n else 1.0)
    it = 0
    budget = min(cfg.max_pivots, 50 * (n + nc) + 1000)
    while True:
        it += 1
        if it > budget:
            return ProgramSolution(Status.ITER_LIMIT, stats={"iterations": it, "wall_time": time.perf_counter() - t0})
        grad = H * x + p.c
        Aw = G[W] if W else np.zeros((0, n))
        Z = _null_space(Aw, n)
        ray = False
        if Z.shape[1]:
            Hr = Z.T @ (H[:, None] * Z)
            ev, V = np.linalg.eigh(Hr)
            gz = V.T @ (Z.T @ grad)
            flat = ev <= 1e-10 * max(1.0, float(np.max(np.abs(ev))) if ev.size else 1.0)
            if np.any(flat & (np.abs(gz) > 1e-10 * gscale)):
                comp = np.where(flat, -gz, 0.0)
                ray = True
            else:
                comp = np.where(flat, 0.0, -gz / np.where(flat, 1.0, ev))
            step = Z @ (V @ comp)
        else:
            step = np.zeros(n)

        if np.max(np.abs(step), initial=0.0) <= 1e-12 * max(1.0, float(np.max(np.abs(x), initial=0.0))):
            if W:
                lam, *_ = np.linalg.lstsq(Aw.T, grad, rcond=None)
            else:
                lam = np.zeros(0)
            ineq = np.array([not eq[i] for i in W], dtype=bool)
            if ineq.any() and np.min(np.where(ineq, lam, np.inf)) < -cfg.kkt_tol * 0.1 * gscale:
                k = int(np.argmin(np.where(ineq, lam, np.inf)))
                W.pop(k)
                continue
            return _finish(p, x, W, lam, origin, A, it, t0)

        slope = G @ step
        alpha = np.inf if ray else 1.0
        block = -1
        inW = np.zeros(nc, dtype=bool)
        inW[W] = True
        for i in range(nc):
            if inW[i] or eq[i]:
                continue
            if slope[i] < -1e-12:
                lim = max((hv[i] - G[i] @ x) / slope[i], 0.0)
                if lim < alpha - 1e-15:
                    alpha, block = lim, i
        if not np.isfinite(alpha):
            return ProgramSolution(Status.UNBOUNDED, ray=step,
                                   stats={"iterations": it, "wall_time": time.perf_counter() - t0})
        x = x + alpha * step
        if block >= 0:
            W.append(block)


def _finish(p, x, W, lam, origin, A, it, t0) -> ProgramSolution:
    y = np.zeros(p.m)
    for k, i in enumerate(W):
        kind, idx = origin[i]
        if kind == "row":
            # multiplier of g^T x >= h; an LE row was negated
            y[idx] = -lam[k] if p.senses[idx] == LE else lam[k]
    grad = 2.0 * (p.qdiag if p.qdiag is not None else 0.0) * x + p.c
    rc = grad - A.T @ y
    return ProgramSolution(Status.OPTIMAL, objective=p.objective(x), x=x, duals=y, reduced_costs=rc,
                           stats={"iterations": it, "wall_time": time.perf_counter() - t0})


def kkt_residual(p: MathProgram, sol: ProgramSolution) -> float:
    """Largest stationarity, feasibility, sign or complementarity violation."""
    x, y, rc = sol.x, sol.duals, sol.reduced_costs
    q = p.qdiag if p.qdiag is not None else np.zeros(p.n)
    grad = 2.0 * q * x + p.c
    stat = grad - np.asarray(p.A.T @ y).ravel() - rc
    res = [float(np.max(np.abs(stat), initial=0.0)), p.primal_residual(x)]
    act = p.row_activity(x)
    for i, s in enumerate(p.senses):
        if s == LE:
            res.append(max(y[i], 0.0))
            res.append(abs(y[i] * (act[i] - p.b[i])))
        elif s == GE:
            res.append(max(-y[i], 0.0))
            res.append(abs(y[i] * (act[i] - p.b[i])))
    for j in range(p.n):
        r = rc[j]
        if r > 0:
            res.append(r * (x[j] - p.lb[j]) if np.isfinite(p.lb[j]) else r)
        elif r < 0:
            res.append(-r * (p.ub[j] - x[j]) if np.isfinite(p.ub[j]) else -r)
    return max(res)

