"""Real-time energy-sharing market.

Customers bid ``b`` so that their sharing quantity is ``q = -a*lam + b``;
each one best-responds to its price with a closed-form demand, and the
operator sets prices by projecting the bids onto the recourse region.  The
centralized program (total disutility minimized over the recourse region)
has the same solution; its balance-row duals are the equilibrium prices.

Per-period vectors are indexed over all customers; renewable arguments
``w`` are indexed over prosumers only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dispatch.plan import DayAheadPlan
from .errors import AuditFailure, DimensionMismatch, MarketInfeasible, NonConvergence
from .model import Customer, MicrogridCase
from .network import ReducedNetwork
from .solver import EQ, ProgramBuilder, SolverConfig, Status, solve_qp

log = logging.getLogger(__name__)


@dataclass
class MarketState:
    iteration: int
    lam: np.ndarray
    b: np.ndarray
    q: np.ndarray
    d: np.ndarray
    w: np.ndarray


@dataclass
class MarketOutcome:
    state: MarketState
    recourse: dict
    disutility: float
    payment: float
    iterations: int
    trace: list = field(default_factory=list)
    damped: bool = False

    @property
    def prices(self) -> np.ndarray:
        return self.state.lam

    @property
    def demands(self) -> np.ndarray:
        return self.state.d


@dataclass
class CentralSolution:
    d: np.ndarray
    q: np.ndarray
    eta: np.ndarray
    lam: np.ndarray
    b: np.ndarray
    objective: float
    recourse: dict


def customer_w(case: MicrogridCase, w) -> np.ndarray:
    """Expand a prosumer vector to all customers (zero for consumers)."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != case.J:
        raise DimensionMismatch(f"expected {case.J} renewable values, got {w.size}")
    full = np.zeros(len(case.customers))
    full[case.prosumers] = w
    return full


def best_response(cust: Customer, t: int, lam: float, w: float, a: float) -> tuple[float, float, float]:
    """Closed-form demand, sharing quantity and bid of one customer."""
    d = min(max((cust.a2 - lam) / (2.0 * cust.a1), cust.d_lo[t]), cust.d_hi[t])
    q = d + cust.d_fixed[t] - (w if cust.is_prosumer else 0.0)
    return d, q, q + a * lam


def _best_responses(case: MicrogridCase, t: int, lam: np.ndarray, wfull: np.ndarray, a: float):
    K = len(case.customers)
    d, q, b = np.zeros(K), np.zeros(K), np.zeros(K)
    for k, c in enumerate(case.customers):
        d[k], q[k], b[k] = best_response(c, t, lam[k], wfull[k], a)
    return d, q, b


def _raise_infeasible(sol, what: str):
    raise MarketInfeasible(f"{what}: the recourse region admits no point for this scenario",
                           certificate=sol.farkas)


def price_update(case: MicrogridCase, plan: DayAheadPlan, t: int, bids, a: float | None = None,
                 net: ReducedNetwork | None = None, config: SolverConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Operator step: nearest deliverable quantities to the bids, and the prices they imply.

    Returns ``(lam, q)`` with ``q`` the Euclidean projection of ``bids`` on the
    recourse region and ``lam = (bids - q) / a``.
    """
    a = case.market_sensitivity if a is None else a
    bids = np.asarray(bids, dtype=float)
    if bids.size != len(case.customers):
        raise DimensionMismatch(f"expected {len(case.customers)} bids, got {bids.size}")
    net = net or ReducedNetwork(case, plan, t)
    bld = ProgramBuilder(f"price_update_t{t + 1}")
    cols = net.add_to(bld)
    for k in range(net.K):
        j = cols[net.sl_q.start + k]
        bld.add_cost(j, -2.0 * bids[k])
        bld.set_quad(j, 1.0)
    bld.obj_const = float(bids @ bids)
    prog = bld.build()
    sol = solve_qp(prog, config)
    if sol.status == Status.INFEASIBLE:
        _raise_infeasible(sol, "price update")
    if sol.status != Status.OPTIMAL:
        raise NonConvergence(f"price update returned {sol.status.value}")
    q = sol.x[[cols[net.sl_q.start + k] for k in range(net.K)]]
    return (bids - q) / a, q


def run_market(case: MicrogridCase, plan: DayAheadPlan, t: int, w, eps: float = 1e-4, max_iter: int = 500,
               a: float | None = None, config: SolverConfig | None = None, damping: bool = True) -> MarketOutcome:
    """Bid/clear iterations from zero prices until the price change is below ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = case.market_sensitivity if a is None else a
    wfull = customer_w(case, w)
    net = ReducedNetwork(case, plan, t)
    K = len(case.customers)
    lam = np.zeros(K)
    trace = []
    steps: list[np.ndarray] = []
    damped = False
    for n in range(1, max_iter + 1):
        d, _, b = _best_responses(case, t, lam, wfull, a)
        trace.append({"iteration": n, "lam": lam.copy(), "d": d.copy()})
        new_lam, q = price_update(case, plan, t, b, a, net, config)
        if damped:
            new_lam = 0.5 * (new_lam + lam)
        step = new_lam - lam
        steps.append(step)
        if np.max(np.abs(step), initial=0.0) <= eps:
            lam = new_lam
            d, q, b = _best_responses(case, t, lam, wfull, a)
            _, qproj = price_update(case, plan, t, b, a, net, config)
            trace.append({"iteration": n + 1, "lam": lam.copy(), "d": d.copy()})
            return _outcome(case, net, t, lam, b, qproj, d, wfull, n, trace, damped, config)
        if damping and not damped and _oscillating(steps):
            log.info("price trace oscillates at iteration %d; averaging steps from here on", n)
            damped = True
        lam = new_lam
    raise NonConvergence(f"market did not converge in {max_iter} iterations", trace=trace)


def _oscillating(steps: list, window: int = 10) -> bool:
    """Sign-alternating steps over ``window`` iterations that are not shrinking."""
    if len(steps) < window + 1:
        return False
    recent = steps[-(window + 1):]
    alternating = all(float(recent[i] @ recent[i - 1]) < 0 for i in range(1, len(recent)))
    first = np.max(np.abs(recent[0]))
    last = np.max(np.abs(recent[-1]))
    return alternating and last >= 0.9 * first


def _outcome(case, net, t, lam, b, q, d, wfull, n, trace, damped, config) -> MarketOutcome:
    # recourse point behind the final quantities
    bld = ProgramBuilder("recourse_point")
    cols = net.add_to(bld)
    for k in range(net.K):
        j = cols[net.sl_q.start + k]
        bld.set_bounds(j, q[k], q[k])
    # prefer the smallest reserve redeployment among equivalent points
    for g in range(net.G):
        bld.set_quad(cols[g], 1e-6)
    prog = bld.build()
    sol = solve_qp(prog, config)
    recourse = net.expand(sol.x) if sol.optimal else {}
    state = MarketState(n, lam.copy(), b.copy(), q.copy(), d.copy(), wfull.copy())
    dis = float(sum(c.disutility(d[k]) for k, c in enumerate(case.customers)))
    return MarketOutcome(state, recourse, dis, float(lam @ q), n, trace, damped)


def _central_program(case: MicrogridCase, t: int, wfull: np.ndarray, net: ReducedNetwork):
    bld = ProgramBuilder(f"central_t{t + 1}")
    cols = net.add_to(bld)
    dcols = []
    for k, c in enumerate(case.customers):
        dcols.append(bld.add_var(f"d_{k}", c.d_lo[t], c.d_hi[t], -c.a2, quad=c.a1))
        bld.obj_const += c.a3
    brows = []
    for k, c in enumerate(case.customers):
        # q - d = d_fixed - w ; its dual is the sharing price
        brows.append(bld.add_row([(cols[net.sl_q.start + k], 1.0), (dcols[k], -1.0)], EQ,
                                 c.d_fixed[t] - wfull[k], f"share_balance[{k}]"))
    return bld.build(), cols, dcols, brows


def solve_centralized(case: MicrogridCase, plan: DayAheadPlan, t: int, w, a: float | None = None,
                      config: SolverConfig | None = None, net: ReducedNetwork | None = None) -> CentralSolution:
    """Minimize total disutility over the recourse region; duals give the prices."""
    a = case.market_sensitivity if a is None else a
    wfull = customer_w(case, w)
    net = net or ReducedNetwork(case, plan, t)
    prog, cols, dcols, brows = _central_program(case, t, wfull, net)
    sol = solve_qp(prog, config)
    if sol.status == Status.INFEASIBLE:
        _raise_infeasible(sol, "centralized market")
    if sol.status != Status.OPTIMAL:
        raise NonConvergence(f"centralized market returned {sol.status.value}")
    d = sol.x[dcols]
    q = sol.x[[cols[net.sl_q.start + k] for k in range(net.K)]]
    eta = sol.duals[brows]
    z = sol.x[cols]
    return CentralSolution(d, q, eta, eta.copy(), q + a * eta, sol.objective, net.expand(z))


def audit_payment(outcome, tol: float = 1e-8) -> float:
    """Total net payment of all customers; must not be negative."""
    if isinstance(outcome, MarketOutcome):
        lam, q = outcome.state.lam, outcome.state.q
    else:
        lam, q = outcome.lam, outcome.q
    total = float(np.dot(lam, q))
    scale = max(1.0, float(np.sum(np.abs(lam * q))))
    if total < -tol * scale:
        raise AuditFailure(f"total net payment {total:.6g} is negative")
    return total


def customer_costs(case: MicrogridCase, t: int, d, q, lam) -> np.ndarray:
    """Per-customer cost: disutility plus the sharing payment."""
    return np.array([c.disutility(d[k]) + lam[k] * q[k] for k, c in enumerate(case.customers)])


def autarky(case: MicrogridCase, t: int, w, lam) -> dict:
    """No-sharing benchmark: each customer balances on its own where it can.

    Demand is the point of its range closest to ``w - d_fixed``; the residual
    that cannot be self-balanced is settled at the given prices.
    """
    wfull = customer_w(case, w)
    d = np.array([min(max(wfull[k] - c.d_fixed[t], c.d_lo[t]), c.d_hi[t]) for k, c in enumerate(case.customers)])
    q = np.array([d[k] + c.d_fixed[t] - wfull[k] for k, c in enumerate(case.customers)])
    lam = np.asarray(lam, dtype=float)
    return {"d": d, "q": q, "cost": customer_costs(case, t, d, q, lam)}
