"""Brute-force oracles used by the test-suite (kept independent of the kernel)."""

from __future__ import annotations

import itertools

import numpy as np

from gridshare.solver.program import EQ, GE, LE, MathProgram


def _halfspaces(p: MathProgram):
    """All constraints as (g, h, is_eq) meaning g x >= h or g x == h."""
    A = p.A.toarray()
    out = []
    for i in range(p.m):
        if p.senses[i] == LE:
            out.append((-A[i], -p.b[i], False))
        elif p.senses[i] == GE:
            out.append((A[i], p.b[i], False))
        else:
            out.append((A[i], p.b[i], True))
    for j in range(p.n):
        e = np.zeros(p.n)
        e[j] = 1.0
        if np.isfinite(p.lb[j]):
            out.append((e, p.lb[j], False))
        if np.isfinite(p.ub[j]):
            out.append((-e, -p.ub[j], False))
    return out


def lp_vertex_enumeration(p: MathProgram, tol: float = 1e-8):
    """Minimum of a bounded LP over every basic feasible point; None if infeasible."""
    hs = _halfspaces(p)
    n = p.n
    G = np.array([h[0] for h in hs])
    hv = np.array([h[1] for h in hs])
    eqmask = np.array([h[2] for h in hs])
    eq_idx = list(np.flatnonzero(eqmask))
    others = [i for i in range(len(hs)) if i not in eq_idx]
    best = None
    need = n - len(eq_idx)
    if need < 0:
        need = 0
    for combo in itertools.combinations(others, need):
        idx = eq_idx + list(combo)
        M = G[idx]
        if np.linalg.matrix_rank(M) < n:
            continue
        x, *_ = np.linalg.lstsq(M, hv[idx], rcond=None)
        if np.max(np.abs(M @ x - hv[idx])) > 1e-7:
            continue
        act = G @ x - hv
        if np.any(act[~eqmask] < -tol * (1 + np.abs(hv[~eqmask]))) or np.any(np.abs(act[eqmask]) > 1e-7):
            continue
        val = float(p.c @ x) + p.obj_const
        if best is None or val < best:
            best = val
    return best


def milp_enumeration(p: MathProgram, lp_solver):
    """Enumerate binaries, solving the continuous remainder with ``lp_solver``."""
    ints = np.flatnonzero(p.integer)
    best = None
    for bits in itertools.product([0.0, 1.0], repeat=len(ints)):
        lb = p.lb.copy()
        ub = p.ub.copy()
        lb[ints] = bits
        ub[ints] = bits
        sol = lp_solver(p.relaxed().with_bounds(lb, ub))
        if sol.optimal and (best is None or sol.objective < best):
            best = sol.objective
    return best


def qp_active_set_enumeration(p: MathProgram, tol: float = 1e-8):
    """Minimum of a strictly convex separable QP by enumerating active sets."""
    hs = _halfspaces(p)
    n = p.n
    G = np.array([h[0] for h in hs])
    hv = np.array([h[1] for h in hs])
    H = np.diag(2.0 * p.qdiag)
    best = None
    for k in range(0, min(n, len(hs)) + 1):
        for combo in itertools.combinations(range(len(hs)), k):
            M = G[list(combo)].reshape(k, n)
            K = np.block([[H, -M.T], [M, np.zeros((k, k))]])
            rhs = np.concatenate([-p.c, hv[list(combo)]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            if np.any(G @ x - hv < -tol):
                continue
            val = p.objective(x)
            if best is None or val < best:
                best = val
    return best
