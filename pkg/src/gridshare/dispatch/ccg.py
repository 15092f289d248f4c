"""Column-and-constraint generation drivers.

``run_ccg``             projection master, endogenous set.
``run_ccg_traditional`` raw scenarios in the master (regression exhibit).
``run_diu``             decision-independent reformulation ``w = u o w'``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import MasterInfeasible, NonConvergence
from ..model import MicrogridCase
from ..solver import SolverConfig
from ..uncertainty import lift, membership, midpoint, project
from .compact import CompactModel, assemble_compact
from .master import solve_master
from .plan import DayAheadPlan
from .subproblem import (solve_feasibility, solve_subproblem_ad, solve_subproblem_decomposed,
                         solve_subproblem_mip)

log = logging.getLogger(__name__)

SUBPROBLEM_MODES = ("mip", "ad", "decomposed")
FEAS_TOL = 1e-6


@dataclass
class IterationRecord:
    iteration: int
    lower_bound: float
    upper_bound: float
    cut: str
    plan: DayAheadPlan
    scenario: np.ndarray
    value: float
    wall_time: float


@dataclass
class CncgState:
    method: str
    pool: list = field(default_factory=list)
    records: list = field(default_factory=list)
    status: str = "running"
    plan: DayAheadPlan | None = None
    objective: float = float("inf")
    wall_time: float = 0.0
    uncertainty_vars: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def lower_bounds(self) -> list:
        return [r.lower_bound for r in self.records]

    @property
    def upper_bounds(self) -> list:
        return [r.upper_bound for r in self.records]

    @property
    def gap(self) -> float:
        if not self.records:
            return float("inf")
        return self.records[-1].upper_bound - self.records[-1].lower_bound

    @property
    def mean_uncertainty_vars(self) -> float:
        return float(np.mean(self.uncertainty_vars)) if self.uncertainty_vars else 0.0

    def trace_rows(self) -> list:
        return [{"iteration": r.iteration, "lower_bound": r.lower_bound, "upper_bound": r.upper_bound,
                 "cut": r.cut, "scenario_id": r.iteration, "value": r.value, "wall_time": r.wall_time}
                for r in self.records]


@dataclass
class CcgResult:
    plan: DayAheadPlan | None
    objective: float
    state: CncgState
    compact: CompactModel

    def __iter__(self):
        return iter((self.plan, self.objective, self.state))


def _worst_case(cm, x, mode, restarts, seed, config, exogenous):
    if mode == "mip":
        return solve_subproblem_mip(cm, x, config, exogenous=exogenous)
    if mode == "ad":
        return solve_subproblem_ad(cm, x, restarts=restarts, seed=seed, config=config, exogenous=exogenous)
    return solve_subproblem_decomposed(cm, x, config, exogenous=exogenous)


def _converged(lb: float, ub: float, eps: float) -> bool:
    return bool(np.isfinite(ub)) and ub - lb <= eps * (1.0 + abs(ub))


def _loop(case: MicrogridCase, method: str, eps: float, subproblem: str, max_iter: int, M: int | None,
          restarts: int, seed: int, config: SolverConfig | None, compact: CompactModel | None) -> CcgResult:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if subproblem not in SUBPROBLEM_MODES:
        raise ValueError(f"unknown subproblem mode {subproblem!r}")
    cm = compact or assemble_compact(case, M)
    state = CncgState(method)
    exogenous = method == "diu"
    master_mode = {"projection": "projection", "traditional": "raw", "diu": "exogenous"}[method]
    state.pool.append(midpoint(case))
    ub = float("inf")
    best_x = None
    t_start = time.perf_counter()
    for j in range(1, max_iter + 1):
        t0 = time.perf_counter()
        try:
            mr = solve_master(cm, state.pool, master_mode, config)
        except MasterInfeasible:
            if method == "traditional":
                state.status = "stuck"
                log.info("traditional master infeasible at iteration %d", j)
                break
            raise
        lb = mr.lower_bound
        state.uncertainty_vars.append(mr.n_uncertainty_vars)
        u = mr.plan.u
        if method == "projection":
            for w in state.pool:
                assert membership(case, u, project(u, w), tol=1e-7), "projected pool scenario left W(u)"
        fc = solve_feasibility(cm, mr.x, config, exogenous=exogenous)
        if fc.value > FEAS_TOL:
            cut, new, value = "feasibility", fc, fc.value
        else:
            new = _worst_case(cm, mr.x, subproblem, restarts, seed + j, config, exogenous)
            cut, value = "optimality", new.value
            cand = cm.first_stage_cost(mr.x) + new.value
            if cand < ub:
                ub, best_x = cand, mr.x
        state.records.append(IterationRecord(j, lb, ub, cut, mr.plan, new.w.copy(), value,
                                             time.perf_counter() - t0))
        log.info("%s iteration %d: LB=%.6f UB=%.6f (%s cut)", method, j, lb, ub, cut)
        if _converged(lb, ub, eps):
            state.status = "optimal"
            break
        if method == "projection":
            pooled = lift(case, u, new.w)
        elif method == "diu":
            pooled = new.w_set
        else:
            pooled = new.w
        if any(np.array_equal(pooled, w) for w in state.pool):
            # with an exact subproblem a repeat means the bounds have met up to solver tolerance
            if method == "traditional":
                state.status = "stuck"
            else:
                state.status = "optimal" if _converged(lb, ub, max(eps, 1e-6)) else "stalled"
            break
        if method == "traditional" and len(state.records) >= 3:
            last = state.records[-3:]
            if all(abs(r.lower_bound - last[0].lower_bound) <= 1e-9 * (1 + abs(lb)) and
                   r.upper_bound == last[0].upper_bound for r in last):
                state.status = "stuck"
                break
        state.pool.append(pooled)
    else:
        state.wall_time = time.perf_counter() - t_start
        raise NonConvergence(f"{method} C&CG hit the iteration cap of {max_iter}", trace=state.trace_rows())
    state.wall_time = time.perf_counter() - t_start
    if best_x is not None:
        state.plan = cm.plan_from_x(best_x)
        state.objective = ub
    return CcgResult(state.plan, state.objective, state, cm)


def run_ccg(case: MicrogridCase, eps: float = 1e-4, subproblem: str = "decomposed", max_iter: int = 100,
            M: int | None = None, restarts: int = 8, seed: int = 0, config: SolverConfig | None = None,
            compact: CompactModel | None = None) -> CcgResult:
    """Projection-based C&CG; returns ``(plan, objective, state)``."""
    res = _loop(case, "projection", eps, subproblem, max_iter, M, restarts, seed, config, compact)
    if res.state.status not in ("optimal",):
        raise NonConvergence(f"projection C&CG ended as {res.state.status}", trace=res.state.trace_rows())
    return res


def run_ccg_traditional(case: MicrogridCase, eps: float = 1e-4, subproblem: str = "decomposed",
                        max_iter: int = 100, M: int | None = None, config: SolverConfig | None = None,
                        compact: CompactModel | None = None) -> CcgResult:
    """Plain C&CG with raw pooled scenarios; ends ``stuck`` instead of looping."""
    return _loop(case, "traditional", eps, subproblem, max_iter, M, 8, 0, config, compact)


def run_diu(case: MicrogridCase, eps: float = 1e-4, subproblem: str = "decomposed", max_iter: int = 100,
            M: int | None = None, restarts: int = 8, seed: int = 0, config: SolverConfig | None = None,
            compact: CompactModel | None = None) -> CcgResult:
    """C&CG on the decision-independent reformulation."""
    res = _loop(case, "diu", eps, subproblem, max_iter, M, restarts, seed, config, compact)
    if res.state.status != "optimal":
        raise NonConvergence(f"DIU C&CG ended as {res.state.status}", trace=res.state.trace_rows())
    return res
