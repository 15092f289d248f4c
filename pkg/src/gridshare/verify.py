"""Invariant suite behind ``gridshare verify``.

Each property draws its own instances from a seeded generator and raises
``PropertyFailure`` with a short reason on the first counterexample.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from . import market
from .dispatch.ccg import run_ccg, run_ccg_traditional, run_diu
from .dispatch.oracle import brute_force_minmax
from .dispatch.plan import DayAheadPlan
from .dispatch.pwl import linearize_disutility
from .dispatch.realtime import soc_path, soc_violations
from .dispatch.subproblem import recourse_value, solve_subproblem_ad, solve_subproblem_mip
from .errors import AuditFailure, MarketInfeasible
from .instances import stuck_case, tiny_case
from .model import bundled_case_path, load_case
from .solver import GE, LE, SolverConfig, Status, from_arrays, kkt_residual, lagrangian_bound, solve
from .uncertainty import enumerate_vertices, half_width, membership, midpoint, vertex_to_scenario

log = logging.getLogger(__name__)


class PropertyFailure(Exception):
    pass


@dataclass
class Property:
    name: str
    group: str
    check: Callable[[int], str]


@dataclass
class Outcome:
    name: str
    group: str
    passed: bool
    detail: str
    seconds: float


def _close(a: float, b: float, rel: float = 1e-6) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


# random kernel programs -----------------------------------------------------

def random_lp(rng: np.random.Generator, n: int | None = None, m: int | None = None):
    """Feasible bounded LP: rows pass through a random interior point, boxes bound every variable."""
    n = n or int(rng.integers(2, 9))
    m = m or int(rng.integers(1, 9))
    A = np.round(rng.uniform(-5, 5, (m, n)), 2)
    x0 = rng.uniform(0, 3, n)
    senses = rng.choice([LE, GE], m)
    slack = rng.uniform(0, 2, m)
    b = A @ x0 + np.where(senses == LE, slack, -slack)
    c = np.round(rng.uniform(-5, 5, n), 2)
    return from_arrays(c, A, senses, b, np.zeros(n), np.full(n, 6.0))


def random_milp(rng: np.random.Generator, binaries: int):
    p = random_lp(rng, n=binaries + int(rng.integers(1, 4)))
    integer = np.zeros(p.n, dtype=bool)
    integer[:binaries] = True
    ub = p.ub.copy()
    ub[:binaries] = 1.0
    return from_arrays(p.c, p.A, p.senses, p.b, p.lb, ub, integer)


def random_projection(rng: np.random.Generator):
    """Euclidean projection of a random point onto a random polytope, as a separable QP."""
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 7))
    A = rng.uniform(-3, 3, (m, n))
    x0 = rng.uniform(-1, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)
    target = rng.uniform(-4, 4, n)
    return from_arrays(-2 * target, A, LE, b, np.full(n, -10.0), np.full(n, 10.0), qdiag=np.ones(n))


def _lp_by_scipy(p, fix: dict | None = None) -> float:
    A = p.A.toarray()
    lb, ub = p.lb.copy(), p.ub.copy()
    for j, v in (fix or {}).items():
        lb[j] = ub[j] = v
    A_ub = np.vstack([A[p.senses == LE], -A[p.senses == GE]])
    b_ub = np.concatenate([p.b[p.senses == LE], -p.b[p.senses == GE]])
    eq = (p.senses != LE) & (p.senses != GE)
    res = linprog(p.c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=p.b[eq] if eq.any() else None,
                  bounds=list(zip(lb, ub)), method="highs")
    return float(res.fun) + p.obj_const if res.status == 0 else float("inf")


def _milp_by_enumeration(p, k: int) -> float:
    """Minimum over all 2^k settings of the leading binaries, by vertex enumeration of the continuous rest.

    Active-set matrices do not depend on the binary setting, so each candidate
    basis is solved for every setting at once.
    """
    A = p.A.toarray()
    G = np.where((p.senses == LE)[:, None], A, -A)
    h = np.where(p.senses == LE, p.b, -p.b)
    nc = p.n - k
    Gc = np.vstack([G[:, k:], np.eye(nc), -np.eye(nc)])
    Z = np.array(list(itertools.product((0.0, 1.0), repeat=k))).T
    H = np.vstack([h[:, None] - G[:, :k] @ Z, np.repeat(p.ub[k:, None], Z.shape[1], 1),
                   np.repeat(-p.lb[k:, None], Z.shape[1], 1)])
    base = p.c[:k] @ Z + p.obj_const
    best = np.full(Z.shape[1], np.inf)
    for rows in itertools.combinations(range(Gc.shape[0]), nc):
        M = Gc[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        X = np.linalg.solve(M, H[list(rows)])
        ok = np.all(Gc @ X <= H + 1e-9 * (1.0 + np.abs(H)), axis=0)
        best = np.where(ok, np.minimum(best, base + p.c[k:] @ X), best)
    return float(best.min())


def check_lp_duality(seed: int, n_inst: int = 60) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_inst):
        p = random_lp(rng)
        sol = solve(p)
        if sol.status != Status.OPTIMAL:
            raise PropertyFailure(f"LP {i}: status {sol.status.value} on a feasible bounded program")
        gap = abs(sol.objective - lagrangian_bound(p, sol.duals))
        worst = max(worst, gap)
        if gap > 1e-8 * max(1.0, abs(sol.objective)):
            raise PropertyFailure(f"LP {i}: duality gap {gap:.3g}")
        ref = _lp_by_scipy(p)
        if not _close(sol.objective, ref, 1e-7):
            raise PropertyFailure(f"LP {i}: objective {sol.objective} differs from reference {ref}")
    return f"{n_inst} LPs, worst duality gap {worst:.2g}"


def check_milp_enumeration(seed: int, n_inst: int = 30, max_bin: int = 6) -> str:
    rng = np.random.default_rng(seed)
    for i in range(n_inst):
        k = int(rng.integers(1, max_bin + 1))
        p = random_milp(rng, k)
        sol = solve(p)
        best = _milp_by_enumeration(p, k)
        got = sol.objective if sol.status == Status.OPTIMAL else float("inf")
        if not (np.isinf(best) and np.isinf(got)) and not _close(got, best, 1e-7):
            raise PropertyFailure(f"MILP {i} ({k} binaries): {got} vs enumeration {best}")
    return f"{n_inst} MILPs with up to {max_bin} binaries"


def check_qp_kkt(seed: int, n_inst: int = 60) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_inst):
        p = random_projection(rng)
        sol = solve(p)
        if sol.status != Status.OPTIMAL:
            raise PropertyFailure(f"QP {i}: status {sol.status.value}")
        r = kkt_residual(p, sol)
        worst = max(worst, r)
        if r > 1e-7:
            raise PropertyFailure(f"QP {i}: KKT residual {r:.3g}")
    return f"{n_inst} projections, worst KKT residual {worst:.2g}"


# market propositions ------------------------------------------------------

def desk_case_and_plan():
    case = load_case("benchmark33")
    plan = DayAheadPlan.load(bundled_case_path("benchmark33").with_name("benchmark33_plan.csv"), case)
    return case, plan


def feasible_market_scenarios(case, plan, n: int, seed: int, max_draws: int = 5000):
    """``n`` (period, w) pairs drawn uniformly from the renewable box and kept if the market clears."""
    rng = np.random.default_rng(seed)
    lo, hi = case.w_bounds()
    out = []
    for _ in range(max_draws):
        if len(out) == n:
            break
        t = int(rng.integers(case.T))
        w = rng.uniform(lo[:, t], hi[:, t])
        try:
            cs = market.solve_centralized(case, plan, t, w)
        except MarketInfeasible:
            continue
        out.append((t, w, cs))
    return out


def check_equilibrium(seed: int, n_scen: int = 8) -> str:
    case, plan = desk_case_and_plan()
    worst_d = worst_l = 0.0
    worst_it = 0
    for t, w, cs in feasible_market_scenarios(case, plan, n_scen, seed):
        mo = market.run_market(case, plan, t, w, a=0.01)
        worst_d = max(worst_d, float(np.max(np.abs(mo.state.d - cs.d))))
        worst_l = max(worst_l, float(np.max(np.abs(mo.state.lam - cs.eta))))
        worst_it = max(worst_it, mo.iterations)
    if worst_d > 1e-3 or worst_l > 1e-3 or worst_it > 50:
        raise PropertyFailure(f"market vs centralized: |d| {worst_d:.3g}, |lam| {worst_l:.3g}, {worst_it} iterations")
    return f"{n_scen} scenarios, |d| {worst_d:.2g} MW, |lam| {worst_l:.2g} $/MWh, <= {worst_it} iterations"


def check_payment(seed: int, n_scen: int = 40) -> str:
    case, plan = desk_case_and_plan()
    low = np.inf
    for t, w, cs in feasible_market_scenarios(case, plan, n_scen, seed):
        try:
            pay = market.audit_payment(cs)
        except AuditFailure as exc:
            raise PropertyFailure(str(exc)) from exc
        if pay < -1e-8:
            raise PropertyFailure(f"total net payment {pay:.6g} is negative")
        low = min(low, pay)
    return f"{n_scen} scenarios, smallest total payment {low:.4g} $"


def check_soc(seed: int, n_traj: int = 1000) -> str:
    case = load_case("benchmark33")
    plan = run_ccg(case).plan
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_traj):
        # endpoints stress the envelope corners, interior draws the rest
        pick = rng.random(plan.pcl.shape) < 0.5
        pc = np.where(pick, rng.choice([0.0, 1.0], plan.pcl.shape), rng.random(plan.pcl.shape))
        pd = np.where(pick, rng.choice([0.0, 1.0], plan.pdl.shape), rng.random(plan.pdl.shape))
        pc = plan.pcl + pc * (plan.pch - plan.pcl)
        pd = plan.pdl + pd * (plan.pdh - plan.pdl)
        bad += soc_violations(case, plan, soc_path(case, pc, pd))
    if bad:
        raise PropertyFailure(f"{bad} SOC envelope violations over {n_traj} trajectories")
    return f"{n_traj} trajectories inside the envelopes"


# uncertainty and dispatch -------------------------------------------------

def check_vertices(seed: int, n_inst: int = 20) -> str:
    """Enumerated vertices lie in W(u) and attain the support function of W(u)."""
    rng = np.random.default_rng(seed)
    for i in range(n_inst):
        case = tiny_case(int(rng.integers(10**6)))
        u = (rng.random((case.J, case.T)) < 0.7).astype(float)
        verts = [vertex_to_scenario(case, u, v) for v in enumerate_vertices(case, u)]
        for w in verts:
            if not membership(case, u, w):
                raise PropertyFailure(f"instance {i}: enumerated vertex outside W(u)")
        lo, hi = case.w_bounds()
        wh = half_width(case)
        we = midpoint(case, u)
        J, T = case.J, case.T
        # W(u) in (w, s) with |w - we| <= wh * s, s in [0, u], budget rows on s
        n = 2 * J * T
        A, b = [], []
        for j, t in itertools.product(range(J), range(T)):
            k = j * T + t
            for sgn in (1.0, -1.0):
                row = np.zeros(n)
                row[k], row[J * T + k] = sgn, -wh[j, t]
                A.append(row)
                b.append(sgn * we[j, t])
        for t in range(T):
            row = np.zeros(n)
            row[J * T + np.arange(J) * T + t] = 1.0
            A.append(row)
            b.append(case.budgets.b_s)
        for j in range(J):
            row = np.zeros(n)
            row[J * T + j * T + np.arange(T)] = 1.0
            A.append(row)
            b.append(case.budgets.b_t)
        bounds = [(lo[j, t] * u[j, t], hi[j, t] * u[j, t]) for j in range(J) for t in range(T)]
        bounds += [(0.0, u[j, t]) for j in range(J) for t in range(T)]
        for _ in range(3):
            g = rng.normal(size=J * T)
            res = linprog(-np.concatenate([g, np.zeros(J * T)]), A_ub=np.array(A), b_ub=np.array(b),
                          bounds=bounds, method="highs")
            best = max(float(g @ w.ravel()) for w in verts)
            if not _close(-res.fun, best, 1e-7):
                raise PropertyFailure(f"instance {i}: support value {-res.fun} vs vertices {best}")
    return f"{n_inst} instances"


def check_pwl(seed: int, n_inst: int = 50) -> str:
    case = load_case("benchmark33")
    rng = np.random.default_rng(seed)
    for _ in range(n_inst):
        k = int(rng.integers(len(case.customers)))
        t = int(rng.integers(case.T))
        M = int(rng.integers(2, 12))
        cust = case.customers[k]
        pw = linearize_disutility(cust, t, M)
        grid = np.linspace(cust.d_lo[t], cust.d_hi[t], 101)
        err = np.array([pw(d) for d in grid]) - cust.disutility(grid)
        if err.min() < -1e-9 or err.max() > pw.error_bound + 1e-9:
            raise PropertyFailure(f"customer {k} period {t + 1} M={M}: error range [{err.min()}, {err.max()}]")
    return f"{n_inst} linearizations within [0, a1 h^2/4]"


def check_ccg_oracle(seed: int, n_inst: int = 6) -> str:
    rng = np.random.default_rng(seed)
    for i in range(n_inst):
        case = tiny_case(int(rng.integers(10**6)))
        ref = brute_force_minmax(case).objective
        res = run_ccg(case, eps=1e-7)
        if not _close(res.objective, ref):
            raise PropertyFailure(f"{case.name}: C&CG {res.objective} vs oracle {ref}")
        for r in res.state.records:
            if r.lower_bound > r.upper_bound + 1e-6 * max(1.0, abs(r.upper_bound)):
                raise PropertyFailure(f"{case.name}: LB above UB at iteration {r.iteration}")
        pool = res.state.pool
        if any(np.array_equal(a, b) for a, b in itertools.combinations(pool, 2)):
            raise PropertyFailure(f"{case.name}: repeated pool scenario")
    return f"{n_inst} tiny instances match the exhaustive oracle"


def check_diu(seed: int, n_inst: int = 6) -> str:
    rng = np.random.default_rng(seed)
    for i in range(n_inst):
        case = tiny_case(int(rng.integers(10**6)))
        a = run_ccg(case, eps=1e-7).objective
        b = run_diu(case, eps=1e-7).objective
        if not _close(a, b):
            raise PropertyFailure(f"{case.name}: projection {a} vs DIU {b}")
    return f"{n_inst} tiny instances agree"


def check_subproblem(seed: int, n_inst: int = 6) -> str:
    rng = np.random.default_rng(seed)
    n = 0
    for i in range(n_inst):
        case = tiny_case(int(rng.integers(10**6)))
        res = run_ccg(case)
        cm = res.compact
        x = cm.x_from_plan(res.plan)
        u = res.plan.u
        ref = max(recourse_value(cm, x, vertex_to_scenario(case, u, v))[0] for v in enumerate_vertices(case, u))
        mip = solve_subproblem_mip(cm, x).value
        ad = solve_subproblem_ad(cm, x, seed=seed + i).value
        if not _close(mip, ref):
            raise PropertyFailure(f"{case.name}: MIP {mip} vs enumeration {ref}")
        if ad > mip + 1e-6 * max(1.0, abs(mip)):
            raise PropertyFailure(f"{case.name}: alternating direction {ad} above MIP {mip}")
        n += 1
    return f"{n} plans: MIP equals enumeration, AD never above"


def check_traditional(seed: int) -> str:
    case = stuck_case()
    trad = run_ccg_traditional(case)
    res = run_ccg(case)
    if trad.state.status != "stuck":
        raise PropertyFailure(f"traditional C&CG ended as {trad.state.status}")
    return f"traditional stuck after {trad.state.iterations} iteration(s); projection {res.objective:.4g}"


def check_pwl_refinement(seed: int, n_inst: int = 4) -> str:
    rng = np.random.default_rng(seed)
    for i in range(n_inst):
        case = tiny_case(int(rng.integers(10**6)))
        a = run_ccg(case, eps=1e-7)
        b = run_ccg(case, eps=1e-7, M=2 * case.pwl_points)
        bound = a.compact.pwl_error + 1e-6 * max(1.0, abs(a.objective))
        if abs(a.objective - b.objective) > bound:
            raise PropertyFailure(f"{case.name}: M vs 2M objectives differ by {abs(a.objective - b.objective):.4g} "
                                  f"> {bound:.4g}")
    return f"{n_inst} instances within the analytic bound"


PROPERTIES = [
    Property("lp_duality", "kernel", check_lp_duality),
    Property("milp_enumeration", "kernel", check_milp_enumeration),
    Property("qp_kkt", "kernel", check_qp_kkt),
    Property("soc_containment", "prop1", check_soc),
    Property("market_equals_central", "prop2", check_equilibrium),
    Property("payment_nonnegative", "prop3", check_payment),
    Property("vertex_support", "uncertainty", check_vertices),
    Property("pwl_overestimate", "pwl", check_pwl),
    Property("pwl_refinement", "pwl", check_pwl_refinement),
    Property("ccg_oracle", "ccg", check_ccg_oracle),
    Property("diu_equals_projection", "ccg", check_diu),
    Property("subproblem_exact", "ccg", check_subproblem),
    Property("traditional_stuck", "ccg", check_traditional),
]


def select(only: str | None) -> list[Property]:
    if not only:
        return list(PROPERTIES)
    keys = [k.strip() for k in only.split(",") if k.strip()]
    chosen = [p for p in PROPERTIES if any(k in (p.name, p.group) for k in keys)]
    if not chosen:
        raise ValueError(f"no property matches {only!r}")
    return chosen


def run_suite(only: str | None = None, seed: int = 0, stop_first: bool = False) -> list[Outcome]:
    out = []
    for prop in select(only):
        t0 = time.perf_counter()
        try:
            detail = prop.check(seed)
            ok = True
        except PropertyFailure as exc:
            detail, ok = str(exc), False
        out.append(Outcome(prop.name, prop.group, ok, detail, time.perf_counter() - t0))
        log.info("%s %s: %s", "PASS" if ok else "FAIL", prop.name, detail)
        if stop_first and not ok:
            break
    return out
