"""Mathematical-programming kernel: LP, MILP and separable convex QP."""

from __future__ import annotations

from ..errors import SolverFailure
from .lp import farkas_margin, lagrangian_bound, simplex
from .milp import branch_and_bound
from .program import (EQ, GE, LE, MathProgram, ProgramBuilder, ProgramSolution, SolverConfig, Status,
                      from_arrays)
from .qp import active_set_qp, kkt_residual

__all__ = [
    "EQ", "GE", "LE", "MathProgram", "ProgramBuilder", "ProgramSolution", "SolverConfig", "Status",
    "from_arrays", "solve", "solve_lp", "solve_milp", "solve_qp", "lagrangian_bound", "farkas_margin",
    "kkt_residual", "require_optimal",
]


def solve_lp(p: MathProgram, config: SolverConfig | None = None) -> ProgramSolution:
    config = config or SolverConfig()
    if p.has_integers or p.has_quadratic:
        raise ValueError("solve_lp expects a continuous linear program")
    if config.backend == "highs":
        from .highs import highs_lp

        return highs_lp(p, config)
    return simplex(p, config)


def solve_milp(p: MathProgram, config: SolverConfig | None = None) -> ProgramSolution:
    config = config or SolverConfig()
    if p.has_quadratic:
        raise ValueError("solve_milp does not accept quadratic terms")
    if config.backend == "highs":
        from .highs import highs_milp

        return highs_milp(p, config)
    return branch_and_bound(p, config)


def solve_qp(p: MathProgram, config: SolverConfig | None = None) -> ProgramSolution:
    config = config or SolverConfig()
    if p.has_integers:
        raise ValueError("solve_qp does not accept integer variables")
    return active_set_qp(p, config)


def solve(p: MathProgram, config: SolverConfig | None = None) -> ProgramSolution:
    """Dispatch on program class."""
    p.validate()
    if p.has_quadratic:
        return solve_qp(p, config)
    if p.has_integers:
        return solve_milp(p, config)
    return solve_lp(p, config)


def require_optimal(sol: ProgramSolution, what: str) -> ProgramSolution:
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"{what}: solver returned {sol.status.value}")
    return sol
