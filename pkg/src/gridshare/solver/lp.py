"""Bounded-variable revised primal simplex with dual recovery.

Rows are turned into equalities with one slack per row (``A x + s = b``),
slack bounds encoding the row sense.  Phase 1 minimises the sum of
artificial variables attached to the rows whose slack cannot absorb the
initial residual; its dual vector is returned as the infeasibility
certificate.  Pricing is Dantzig's rule with a switch to Bland's rule
after ``stall_limit`` consecutive degenerate pivots.
"""

from __future__ import annotations

import time

import numpy as np

from .program import GE, LE, MathProgram, ProgramSolution, SolverConfig, Status

_PIV_TOL = 1e-9


class _Tableau:
    def __init__(self, M: np.ndarray, b: np.ndarray, L: np.ndarray, U: np.ndarray,
                 x: np.ndarray, basis: np.ndarray, cfg: SolverConfig):
        self.M = M
        self.b = b
        self.L = L
        self.U = U
        self.x = x
        self.basis = basis
        self.cfg = cfg
        self.is_basic = np.zeros(M.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0
        self.bscale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
        self.refactor()

    def refactor(self) -> None:
        B = self.M[:, self.basis]
        self.Binv = np.linalg.inv(B) if B.size else np.zeros((0, 0))
        nb = ~self.is_basic
        rhs = self.b - self.M[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def run(self, cost: np.ndarray, budget: int) -> str:
        """Iterate to optimality for ``cost``. Returns 'optimal', 'unbounded' or 'limit'."""
        cfg = self.cfg
        M, L, U, x = self.M, self.L, self.U, self.x
        m = M.shape[0]
        cscale = max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        opt_tol = 1e-9 * cscale
        btol = 1e-9 * self.bscale
        stall = 0
        since_refactor = 0
        self.ray = None
        while True:
            if self.iterations >= budget:
                return "limit"
            if since_refactor >= cfg.refactor_every:
                self.refactor()
                since_refactor = 0
            y = self.Binv.T @ cost[self.basis] if m else np.zeros(0)
            d = cost - M.T @ y
            nb = ~self.is_basic
            can_up = nb & (x < U - btol)
            can_dn = nb & (x > L + btol)
            inc = can_up & (d < -opt_tol)
            dec = can_dn & (d > opt_tol)
            elig = inc | dec
            if not elig.any():
                self.y = y
                self.d = d
                return "optimal"
            if stall > cfg.stall_limit:
                j = int(np.flatnonzero(elig)[0])
            else:
                score = np.where(elig, np.abs(d), -1.0)
                j = int(np.argmax(score))
            dirn = 1.0 if inc[j] else -1.0
            alpha = self.Binv @ M[:, j] if m else np.zeros(0)
            delta = -dirn * alpha
            theta = np.inf
            leave = -1
            to_upper = False
            if m:
                xb = x[self.basis]
                lb_ = L[self.basis]
                ub_ = U[self.basis]
                lim = np.full(m, np.inf)
                dn = delta < -_PIV_TOL
                up = delta > _PIV_TOL
                with np.errstate(invalid="ignore", divide="ignore"):
                    lim_dn = (xb - lb_) / (-delta)
                    lim_up = (ub_ - xb) / delta
                lim[dn] = lim_dn[dn]
                lim[up] = lim_up[up]
                lim = np.maximum(lim, 0.0)
                tmin = float(np.min(lim))
                if np.isfinite(tmin):
                    ties = np.flatnonzero(lim <= tmin + 1e-12)
                    if stall > cfg.stall_limit:
                        r = int(ties[np.argmin(self.basis[ties])])
                    else:
                        r = int(ties[np.argmax(np.abs(delta[ties]))])
                    theta = float(lim[r])
                    leave = r
                    to_upper = bool(delta[r] > 0)
            span = U[j] - L[j]
            if np.isfinite(span) and span <= theta:
                x[j] = U[j] if dirn > 0 else L[j]
                if m:
                    x[self.basis] += span * delta
                self.iterations += 1
                since_refactor += 1
                stall = 0
                continue
            if not np.isfinite(theta):
                ray = np.zeros(M.shape[1])
                ray[j] = dirn
                if m:
                    ray[self.basis] = delta
                self.ray = ray
                return "unbounded"
            x[j] += dirn * theta
            if m:
                x[self.basis] += theta * delta
            out = self.basis[leave]
            x[out] = U[out] if to_upper else L[out]
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.is_basic[out] = False
            self.is_basic[j] = True
            self.basis[leave] = j
            self.iterations += 1
            since_refactor += 1
            stall = stall + 1 if theta <= 1e-12 else 0


def _dense(A) -> np.ndarray:
    return A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)


def simplex(p: MathProgram, cfg: SolverConfig | None = None, lb=None, ub=None) -> ProgramSolution:
    """Solve the LP relaxation of ``p`` (optionally with overridden bounds)."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    A = _dense(p.A)
    m, n = A.shape
    lb = p.lb if lb is None else lb
    ub = p.ub if ub is None else ub
    if np.any(lb > ub + 1e-12):
        return ProgramSolution(Status.INFEASIBLE, stats={"iterations": 0, "wall_time": 0.0})
    b = p.b.astype(float)
    sl = np.where(p.senses == GE, -np.inf, 0.0)
    su = np.where(p.senses == LE, np.inf, 0.0)

    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    resid = b - A @ x0
    clipped = np.clip(resid, sl, su)
    gap = resid - clipped
    bscale = max(1.0, float(np.max(np.abs(b))) if m else 1.0)
    need = np.abs(gap) > 1e-9 * bscale
    art_rows = np.flatnonzero(need)
    k = art_rows.size
    art = np.zeros((m, k))
    art[art_rows, np.arange(k)] = np.sign(gap[art_rows])

    M = np.hstack([A, np.eye(m), art])
    L = np.concatenate([lb, sl, np.zeros(k)])
    U = np.concatenate([ub, su, np.full(k, np.inf)])
    x = np.concatenate([x0, np.where(need, clipped, resid), np.abs(gap[art_rows])])
    basis = np.array([n + m + int(np.searchsorted(art_rows, i)) if need[i] else n + i for i in range(m)],
                     dtype=np.int64)
    tab = _Tableau(M, b, L, U, x, basis, cfg)

    stats = {"iterations": 0, "wall_time": 0.0, "phase1_iterations": 0}
    if k:
        c1 = np.concatenate([np.zeros(n + m), np.ones(k)])
        res = tab.run(c1, cfg.max_pivots)
        stats["phase1_iterations"] = tab.iterations
        if res == "limit":
            stats.update(iterations=tab.iterations, wall_time=time.perf_counter() - t0)
            return ProgramSolution(Status.ITER_LIMIT, stats=stats)
        infeas = float(np.sum(tab.x[n + m:]))
        if infeas > cfg.feas_tol * bscale:
            stats.update(iterations=tab.iterations, wall_time=time.perf_counter() - t0,
                         infeasibility=infeas)
            return ProgramSolution(Status.INFEASIBLE, farkas=tab.y.copy(), stats=stats)
        tab.U[n + m:] = 0.0
        nb_art = ~tab.is_basic[n + m:]
        tab.x[n + m:][nb_art] = 0.0
        tab.refactor()

    c2 = np.concatenate([p.c, np.zeros(m + k)])
    res = tab.run(c2, cfg.max_pivots)
    if res == "optimal":
        # one refactorisation guards against drift accumulated in the updates
        tab.refactor()
        res = tab.run(c2, cfg.max_pivots)
    stats.update(iterations=tab.iterations, wall_time=time.perf_counter() - t0)
    if res == "limit":
        return ProgramSolution(Status.ITER_LIMIT, stats=stats)
    if res == "unbounded":
        return ProgramSolution(Status.UNBOUNDED, ray=tab.ray[:n].copy(), stats=stats)
    xs = tab.x[:n].copy()
    y = tab.y.copy()
    rc = p.c - A.T @ y
    obj = float(p.c @ xs) + p.obj_const
    return ProgramSolution(Status.OPTIMAL, objective=obj, x=xs, duals=y, reduced_costs=rc, stats=stats)


def lagrangian_bound(p: MathProgram, y: np.ndarray, lb=None, ub=None, tol: float = 1e-9) -> float:
    """Dual objective of a linear program evaluated at row duals ``y``.

    Equal to the primal optimum when ``y`` is dual optimal; ``-inf`` when the
    signs of ``y`` or of the implied reduced costs are inconsistent with the
    row senses and bounds.
    """
    lb = p.lb if lb is None else lb
    ub = p.ub if ub is None else ub
    if np.any((p.senses == LE) & (y > 1e-12)) or np.any((p.senses == GE) & (y < -1e-12)):
        return -np.inf
    rc = p.c - np.asarray(p.A.T @ y).ravel()
    scale = tol * max(1.0, float(np.max(np.abs(p.c))) if p.n else 1.0)
    val = float(p.b @ y) + p.obj_const
    for j, r in enumerate(rc):
        if abs(r) <= scale:
            # numerically zero reduced cost; charge it at any finite bound
            if np.isfinite(lb[j]):
                val += r * lb[j]
            elif np.isfinite(ub[j]):
                val += r * ub[j]
            continue
        if r > 0:
            if not np.isfinite(lb[j]):
                return -np.inf
            val += r * lb[j]
        elif r < 0:
            if not np.isfinite(ub[j]):
                return -np.inf
            val += r * ub[j]
    return val


def farkas_margin(p: MathProgram, y: np.ndarray, lb=None, ub=None) -> float:
    """Infeasibility proven by multipliers ``y`` (positive means proven).

    For any ``x`` inside its bounds satisfying every row, ``y^T b`` is at most
    the supremum of ``y^T A x`` plus the slack contribution; the returned value
    is how far ``y^T b`` exceeds that supremum.
    """
    lb = p.lb if lb is None else lb
    ub = p.ub if ub is None else ub
    g = np.asarray(p.A.T @ y).ravel()
    val = float(p.b @ y)
    for j, gj in enumerate(g):
        if gj > 1e-12:
            if not np.isfinite(ub[j]):
                return -np.inf
            val -= gj * ub[j]
        elif gj < -1e-12:
            if not np.isfinite(lb[j]):
                return -np.inf
            val -= gj * lb[j]
    # slack s = b - A x lies in [0, inf) for <=, (-inf, 0] for >=, {0} for ==
    for i, s in enumerate(p.senses):
        if s == LE and y[i] > 1e-12:
            return -np.inf
        if s == GE and y[i] < -1e-12:
            return -np.inf
    return val
