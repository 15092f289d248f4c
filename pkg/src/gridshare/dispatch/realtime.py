"""Out-of-sample replay of a day-ahead plan.

Each scenario is cleared period by period with the centralized market
program; storage powers of the cleared points are then chained through the
state-of-charge recursion and checked against the day-ahead envelopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import MarketInfeasible
from ..market import solve_centralized
from ..model import MicrogridCase
from ..network import ReducedNetwork
from ..solver import SolverConfig
from .plan import DayAheadPlan


@dataclass
class RealtimeReport:
    n: int
    infeasible: int
    costs: list = field(default_factory=list)
    soc_violations: int = 0
    soc_paths: list = field(default_factory=list)

    @property
    def infeasible_rate(self) -> float:
        return self.infeasible / self.n if self.n else 0.0

    @property
    def mean_cost(self) -> float:
        return float(np.mean(self.costs)) if self.costs else float("nan")

    @property
    def std_cost(self) -> float:
        return float(np.std(self.costs)) if self.costs else float("nan")

    def summary(self) -> dict:
        return {"n": self.n, "infeasible": self.infeasible, "infeasible_rate": self.infeasible_rate,
                "mean_cost": self.mean_cost, "std_cost": self.std_cost, "soc_violations": self.soc_violations}


def soc_path(case: MicrogridCase, pc: np.ndarray, pd: np.ndarray) -> np.ndarray:
    """SOC after each period for charge/discharge powers of shape ``E x T``."""
    E = np.zeros_like(pc, dtype=float)
    for e, st in enumerate(case.storages):
        level = st.e0
        for t in range(case.T):
            level = level + (pc[e, t] * st.eta_c - pd[e, t] / st.eta_d) * case.step
            E[e, t] = level
    return E


def soc_violations(case: MicrogridCase, plan: DayAheadPlan, E: np.ndarray, tol: float = 1e-6) -> int:
    """Count periods where the SOC leaves the envelope, the device range or the terminal band."""
    bad = 0
    for e, st in enumerate(case.storages):
        for t in range(case.T):
            lvl = E[e, t]
            if not (plan.El[e, t] - tol <= lvl <= plan.Eh[e, t] + tol and st.e_min - tol <= lvl <= st.e_max + tol):
                bad += 1
        if case.T and abs(E[e, -1] - st.e0) > st.delta_e + tol:
            bad += 1
    return bad


def simulate_realtime(case: MicrogridCase, plan: DayAheadPlan, scenarios, config: SolverConfig | None = None,
                      keep_paths: bool = False) -> RealtimeReport:
    plan.check_shape(case)
    nets = [ReducedNetwork(case, plan, t) for t in range(case.T)]
    rep = RealtimeReport(n=len(scenarios), infeasible=0)
    n_st = len(case.storages)
    for w in scenarios:
        w = np.asarray(w, dtype=float)
        pc = np.zeros((n_st, case.T))
        pd = np.zeros((n_st, case.T))
        cost = 0.0
        ok = True
        for t in range(case.T):
            try:
                cs = solve_centralized(case, plan, t, w[:, t], config=config, net=nets[t])
            except MarketInfeasible:
                ok = False
                break
            cost += cs.objective
            pc[:, t] = cs.recourse["pc"]
            pd[:, t] = cs.recourse["pd"]
        if not ok:
            rep.infeasible += 1
            continue
        rep.costs.append(cost)
        E = soc_path(case, pc, pd)
        rep.soc_violations += soc_violations(case, plan, E)
        if keep_paths:
            rep.soc_paths.append(E)
    return rep
