"""Best-bound branch-and-bound over the native simplex."""

from __future__ import annotations

import heapq
import time

import numpy as np

from .lp import simplex
from .program import MathProgram, ProgramSolution, SolverConfig, Status


def _most_fractional(x: np.ndarray, integer: np.ndarray, tol: float) -> int:
    frac = np.abs(x - np.round(x))
    frac = np.where(integer, frac, 0.0)
    best = -1
    best_score = tol
    for j in np.flatnonzero(integer):
        # distance to the nearest integer, ties resolved by lowest index
        if frac[j] > best_score + 1e-12:
            best, best_score = int(j), frac[j]
    return best


def branch_and_bound(p: MathProgram, cfg: SolverConfig | None = None) -> ProgramSolution:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    integer = p.integer
    lb0 = p.lb.copy()
    ub0 = p.ub.copy()
    lb0[integer] = np.ceil(lb0[integer] - cfg.int_tol)
    ub0[integer] = np.floor(ub0[integer] + cfg.int_tol)

    incumbent = None
    inc_obj = np.inf
    nodes = 0
    lp_iters = 0
    seq = 0
    root = simplex(p, cfg, lb0, ub0)
    lp_iters += root.stats.get("iterations", 0)
    nodes += 1
    if root.status == Status.INFEASIBLE:
        return ProgramSolution(Status.INFEASIBLE, farkas=root.farkas,
                               stats={"nodes": 1, "iterations": lp_iters, "wall_time": time.perf_counter() - t0})
    if root.status != Status.OPTIMAL:
        return ProgramSolution(root.status, ray=root.ray,
                               stats={"nodes": 1, "iterations": lp_iters, "wall_time": time.perf_counter() - t0})
    heap = [(root.objective, seq, lb0, ub0, root)]
    status = Status.OPTIMAL
    while heap:
        bound, _, lb, ub, sol = heapq.heappop(heap)
        tol = cfg.mip_gap * max(1.0, abs(inc_obj)) if np.isfinite(inc_obj) else 0.0
        if bound >= inc_obj - tol:
            # best-bound order: every remaining node is at least as bad
            heap.clear()
            break
        j = _most_fractional(sol.x, integer, cfg.int_tol)
        if j < 0:
            incumbent = sol.x.copy()
            incumbent[integer] = np.round(incumbent[integer])
            inc_obj = sol.objective
            continue
        if nodes >= cfg.max_nodes or (cfg.time_limit and time.perf_counter() - t0 > cfg.time_limit):
            status = Status.ITER_LIMIT
            break
        v = sol.x[j]
        children = []
        dn_ub = ub.copy()
        dn_ub[j] = np.floor(v)
        children.append((lb, dn_ub))
        up_lb = lb.copy()
        up_lb[j] = np.ceil(v)
        children.append((up_lb, ub))
        for clb, cub in children:
            child = simplex(p, cfg, clb, cub)
            nodes += 1
            lp_iters += child.stats.get("iterations", 0)
            if child.status == Status.OPTIMAL:
                if child.objective < inc_obj - (cfg.mip_gap * max(1.0, abs(inc_obj)) if np.isfinite(inc_obj) else 0.0):
                    seq += 1
                    heapq.heappush(heap, (child.objective, seq, clb, cub, child))
            elif child.status == Status.UNBOUNDED:
                return ProgramSolution(Status.UNBOUNDED, ray=child.ray,
                                       stats={"nodes": nodes, "iterations": lp_iters,
                                              "wall_time": time.perf_counter() - t0})
    stats = {"nodes": nodes, "iterations": lp_iters, "wall_time": time.perf_counter() - t0}
    if incumbent is None:
        if status == Status.ITER_LIMIT:
            return ProgramSolution(Status.ITER_LIMIT, stats=stats)
        return ProgramSolution(Status.INFEASIBLE, stats=stats)
    stats["best_bound"] = min([h[0] for h in heap], default=inc_obj)
    return ProgramSolution(status, objective=p.objective(incumbent), x=incumbent, stats=stats)
