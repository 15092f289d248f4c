"""Worst-case scenario search for a fixed first stage.

The inner min is dualized, so the adversary maximizes
``(h - C x - T w)'z`` over dual-feasible ``z`` and ``w`` on the budgeted
set.  Writing ``w = u*(we + wh*(zp - zm))`` with binary deviation bits,
the products ``zp*zeta`` and ``zm*zeta`` (``zeta = T'z``) are replaced by
exact envelope rows under a bound ``|zeta| <= M_dual``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import BigMSaturated, DualInfeasible, SolverFailure, TooLarge
from ..solver import EQ, GE, LE, SolverConfig, Status, from_arrays, solve_lp, solve_milp
from ..uncertainty import half_width, midpoint
from .compact import CompactModel
from .plan import DayAheadPlan

log = logging.getLogger(__name__)

M_DUAL = 1e4
MAX_DOUBLINGS = 3
HIGHS = SolverConfig(backend="highs", mip_gap=1e-9)


@dataclass
class WorstCase:
    """Result of a scenario search.

    ``w`` is the injected scenario (zero on disconnected slots); ``w_set``
    is the point of the searched set (equal to ``w`` for the endogenous
    set, the unmasked ``w'`` for the decision-independent one).
    """

    w: np.ndarray
    value: float
    w_set: np.ndarray
    zplus: np.ndarray
    zminus: np.ndarray
    stats: dict = field(default_factory=dict)

    def __iter__(self):
        # allows ``w, value = solve_...(...)``
        return iter((self.w, self.value))


def _split_plan(cm: CompactModel, plan) -> np.ndarray:
    return cm.x_from_plan(plan) if isinstance(plan, DayAheadPlan) else np.asarray(plan, dtype=float)


def _u_of(cm: CompactModel, x: np.ndarray) -> np.ndarray:
    return np.round(x[cm.u_cols]).reshape(cm.case.J, cm.case.T)


def recourse_value(cm: CompactModel, x: np.ndarray, w, config: SolverConfig | None = None):
    """Optimal recourse value and row duals at ``(x, w)``; ``(inf, None)`` when infeasible."""
    sol = solve_lp(cm.recourse_program(x, w), config or HIGHS)
    if sol.status == Status.INFEASIBLE:
        return np.inf, None
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"recourse LP returned {sol.status.value}")
    return sol.objective, sol.duals


def recourse_violation(cm: CompactModel, x: np.ndarray, w, config: SolverConfig | None = None) -> float:
    """Least total slack needed to make the recourse rows feasible at ``(x, w)``."""
    sol = solve_lp(cm.recourse_program(x, w, slack=True), config or HIGHS)
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"slacked recourse LP returned {sol.status.value}")
    return max(sol.objective, 0.0)


def _dual_mip(cm: CompactModel, x: np.ndarray, inject: np.ndarray, deviable: np.ndarray, feasibility: bool,
              M: float, config: SolverConfig):
    case = cm.case
    J, T, m, nw, ny = case.J, case.T, cm.m, cm.nw, cm.ny
    b = cm.h - cm.C @ x
    mid = midpoint(case).ravel()
    wh = half_width(case).ravel()
    inj = inject.ravel().astype(float)
    dev = deviable.ravel() & (wh > 0)
    # columns: z (m) | zeta (nw) | zp (nw) | zm (nw) | fp (nw) | fm (nw)
    oz, oze, ozp, ozm, ofp, ofm = 0, m, m + nw, m + 2 * nw, m + 3 * nw, m + 4 * nw
    n = m + 5 * nw
    c = np.zeros(n)
    c[oz:oz + m] = -b
    c[oze:oze + nw] = inj * mid
    c[ofp:ofp + nw] = inj * wh
    c[ofm:ofm + nw] = -inj * wh
    lb = np.zeros(n)
    ub = np.zeros(n)
    eq = cm.senses == EQ
    if feasibility:
        lb[oz:oz + m] = np.where(eq, -1.0, 0.0)
        ub[oz:oz + m] = 1.0
    else:
        lb[oz:oz + m] = np.where(eq, -np.inf, 0.0)
        ub[oz:oz + m] = np.inf
    lb[oze:oze + nw], ub[oze:oze + nw] = -M, M
    ub[ozp:ozp + nw] = dev
    ub[ozm:ozm + nw] = dev
    lb[ofp:ofp + nw], ub[ofp:ofp + nw] = -M * dev, M * dev
    lb[ofm:ofm + nw], ub[ofm:ofm + nw] = -M * dev, M * dev
    integer = np.zeros(n, dtype=bool)
    integer[ozp:ozm + nw] = True

    I = sp.identity(nw, format="csr")
    Z = sp.csr_matrix((nw, nw))
    blocks = [
        # H'z = rho (or 0)
        [cm.H.T.tocsr(), sp.csr_matrix((ny, 5 * nw))],
        # zeta - T'z = 0
        [-cm.T.T.tocsr(), sp.hstack([I, Z, Z, Z, Z])],
    ]
    rhs = [np.zeros(ny) if feasibility else cm.rho, np.zeros(nw)]
    senses = [np.full(ny, EQ), np.full(nw, EQ)]
    # budgets and one-sign-per-slot
    sel = sp.hstack([Z, I, I, Z, Z])
    per_t = sp.csr_matrix((np.ones(nw), (np.arange(nw) % T, np.arange(nw))), shape=(T, nw))
    per_j = sp.csr_matrix((np.ones(nw), (np.arange(nw) // T, np.arange(nw))), shape=(J, nw))
    budgets = case.budgets
    for mat, cap in ((I, 1.0), (per_t, budgets.b_s), (per_j, budgets.b_t)):
        blocks.append([sp.csr_matrix((mat.shape[0], m)), mat @ sel])
        rhs.append(np.full(mat.shape[0], float(cap)))
        senses.append(np.full(mat.shape[0], LE))
    # envelopes of f = zbit * zeta
    for obit, off in ((ozp, ofp), (ozm, ofm)):
        bit = sp.csr_matrix((np.ones(nw), (np.arange(nw), obit - m + np.arange(nw))), shape=(nw, 5 * nw))
        fcol = sp.csr_matrix((np.ones(nw), (np.arange(nw), off - m + np.arange(nw))), shape=(nw, 5 * nw))
        zeta = sp.csr_matrix((np.ones(nw), (np.arange(nw), np.arange(nw))), shape=(nw, 5 * nw))
        zm_ = sp.csr_matrix((nw, m))
        for mat, sense, r in ((fcol - M * bit, LE, 0.0), (fcol + M * bit, GE, 0.0),
                              (fcol - zeta + M * bit, LE, M), (fcol - zeta - M * bit, GE, -M)):
            blocks.append([zm_, mat])
            rhs.append(np.full(nw, r))
            senses.append(np.full(nw, sense))
    A = sp.vstack([sp.hstack(bl) for bl in blocks], format="csr")
    prog = from_arrays(c, A, np.concatenate(senses), np.concatenate(rhs), lb, ub, integer,
                       name="feasibility" if feasibility else "subproblem")
    sol = solve_milp(prog, config)
    return sol, (oze, ozp, ozm)


def _search(cm: CompactModel, x: np.ndarray, inject: np.ndarray, deviable: np.ndarray, feasibility: bool,
            config: SolverConfig | None):
    config = config or HIGHS
    case = cm.case
    nw = cm.nw
    if feasibility:
        M = float(np.max(np.asarray(abs(cm.T).sum(axis=0)).ravel(), initial=1.0))
        tries = 1
    else:
        M = M_DUAL
        tries = MAX_DOUBLINGS + 1
    prev = None
    for attempt in range(tries):
        sol, (oze, ozp, ozm) = _dual_mip(cm, x, inject, deviable, feasibility, M, config)
        if sol.status == Status.UNBOUNDED:
            raise SolverFailure("worst-case search is unbounded: the recourse is infeasible for some "
                                "scenario, run the feasibility check first")
        if sol.status == Status.INFEASIBLE:
            raise DualInfeasible("recourse dual has no feasible point: the recourse problem is unbounded")
        if sol.status != Status.OPTIMAL:
            raise SolverFailure(f"worst-case MIP returned {sol.status.value}")
        zp = np.round(sol.x[ozp:ozp + nw]).reshape(case.J, case.T)
        zm = np.round(sol.x[ozm:ozm + nw]).reshape(case.J, case.T)
        zeta = sol.x[oze:oze + nw]
        value = -sol.objective
        saturated = (not feasibility) and bool(np.any((np.abs(zeta) >= M - 1e-6) & (inject.ravel() > 0)))
        if not saturated:
            break
        if prev is not None and abs(value - prev) <= 1e-9 * max(1.0, abs(value)):
            # a larger bound did not change the optimum, so it does not bind
            break
        if attempt == tries - 1:
            raise BigMSaturated(f"dual bound {M:g} still binding after {MAX_DOUBLINGS} doublings")
        log.info("dual bound %g binds; doubling", M)
        prev = value
        M *= 2.0
    w_set = midpoint(case) + half_width(case) * (zp - zm)
    w = inject * w_set
    return w, w_set, zp, zm, value, {"M_dual": M, "mip_value": value}


def solve_subproblem_mip(cm: CompactModel, plan, config: SolverConfig | None = None,
                         exogenous: bool = False) -> WorstCase:
    """Exact worst case of the recourse value via the big-M dual MIP.

    With ``exogenous`` the search runs over the decision-independent set
    (deviations allowed on every slot) and the plan's bits only mask the
    injection.
    """
    x = _split_plan(cm, plan)
    u = _u_of(cm, x)
    deviable = np.ones_like(u, dtype=bool) if exogenous else u > 0.5
    w, w_set, zp, zm, mip_value, stats = _search(cm, x, u, deviable, False, config)
    value, _ = recourse_value(cm, x, w, config)
    if not np.isfinite(value):
        raise SolverFailure("worst-case scenario leaves the recourse infeasible")
    stats["gap_to_lp"] = mip_value - value
    return WorstCase(w, value, w_set, zp, zm, stats)


def solve_feasibility(cm: CompactModel, plan, config: SolverConfig | None = None,
                      exogenous: bool = False) -> WorstCase:
    """Largest total slack any scenario of the set forces on the recourse rows."""
    x = _split_plan(cm, plan)
    u = _u_of(cm, x)
    deviable = np.ones_like(u, dtype=bool) if exogenous else u > 0.5
    w, w_set, zp, zm, mip_value, stats = _search(cm, x, u, deviable, True, config)
    viol = recourse_violation(cm, x, w, config)
    return WorstCase(w, viol, w_set, zp, zm, stats)


# alternating direction -------------------------------------------------------

def _best_deviation(cm: CompactModel, gain_up: np.ndarray, gain_dn: np.ndarray, deviable: np.ndarray,
                    config: SolverConfig):
    """Budget-feasible sign pattern maximizing a separable linear gain."""
    case = cm.case
    J, T, nw = case.J, case.T, cm.nw
    dev = deviable.ravel()
    c = -np.concatenate([gain_up.ravel(), gain_dn.ravel()])
    ub = np.concatenate([dev, dev]).astype(float)
    I = sp.identity(nw, format="csr")
    sel = sp.hstack([I, I])
    per_t = sp.csr_matrix((np.ones(nw), (np.arange(nw) % T, np.arange(nw))), shape=(T, nw))
    per_j = sp.csr_matrix((np.ones(nw), (np.arange(nw) // T, np.arange(nw))), shape=(J, nw))
    A = sp.vstack([sel, per_t @ sel, per_j @ sel], format="csr")
    b = np.concatenate([np.ones(nw), np.full(T, float(case.budgets.b_s)), np.full(J, float(case.budgets.b_t))])
    prog = from_arrays(c, A, np.full(A.shape[0], LE), b, np.zeros(2 * nw), ub, np.ones(2 * nw, dtype=bool),
                       name="ad_deviation")
    sol = solve_milp(prog, config)
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"deviation step returned {sol.status.value}")
    z = np.round(sol.x)
    return z[:nw].reshape(J, T), z[nw:].reshape(J, T)


def _random_vertex(case, deviable: np.ndarray, rng: np.random.Generator):
    J, T = case.J, case.T
    zp = np.zeros((J, T))
    zm = np.zeros((J, T))
    col = np.zeros(T)
    row = np.zeros(J)
    wh = half_width(case)
    slots = [(j, t) for j in range(J) for t in range(T) if deviable[j, t] and wh[j, t] > 0]
    for i in rng.permutation(len(slots)):
        j, t = slots[i]
        if col[t] < case.budgets.b_s and row[j] < case.budgets.b_t and rng.random() < 0.5:
            (zp if rng.random() < 0.5 else zm)[j, t] = 1.0
            col[t] += 1
            row[j] += 1
    return zp, zm


def solve_subproblem_ad(cm: CompactModel, plan, restarts: int = 8, seed: int = 0,
                        config: SolverConfig | None = None, tol: float = 1e-6, max_rounds: int = 50,
                        exogenous: bool = False) -> WorstCase:
    """Alternate between the recourse duals and the best vertex for them.

    Every value reported is a recourse LP optimum at a point of the set, so
    the result never exceeds the exact worst case.
    """
    config = config or HIGHS
    case = cm.case
    x = _split_plan(cm, plan)
    u = _u_of(cm, x)
    deviable = np.ones_like(u, dtype=bool) if exogenous else u > 0.5
    rng = np.random.default_rng(seed)
    mid = midpoint(case)
    wh = half_width(case)
    starts = [(np.zeros_like(u), np.zeros_like(u))]
    starts += [_random_vertex(case, deviable, rng) for _ in range(restarts)]
    best = None
    rounds_total = 0
    # a path entering a vertex seen before repeats an earlier path from there on
    seen: dict = {}

    def evaluate(zp, zm):
        key = (zp * u - zm * u).tobytes()
        if key not in seen:
            seen[key] = recourse_value(cm, x, u * (mid + wh * (zp - zm)), config)
            return seen[key], False
        return seen[key], True

    for zp, zm in starts:
        w_set = mid + wh * (zp - zm)
        (val, duals), again = evaluate(zp, zm)
        if duals is None or again:
            continue
        for _ in range(max_rounds):
            rounds_total += 1
            zeta = (cm.T.T @ duals).reshape(case.J, case.T)
            # objective term -zeta*w, so an upward step gains -zeta*wh
            gain = -zeta * wh * u
            zp2, zm2 = _best_deviation(cm, np.maximum(gain, 0.0), np.maximum(-gain, 0.0), deviable, config)
            w2 = mid + wh * (zp2 - zm2)
            (val2, duals2), again = evaluate(zp2, zm2)
            if again or duals2 is None or val2 <= val + tol * max(1.0, abs(val)):
                break
            zp, zm, w_set, val, duals = zp2, zm2, w2, val2, duals2
        if best is None or val > best.value:
            best = WorstCase(u * w_set, val, w_set, zp, zm, {})
    if best is None:
        raise SolverFailure("no start point of the alternating search admits a feasible recourse")
    best.stats["rounds"] = rounds_total
    return best


# period decomposition ---------------------------------------------------------

MAX_PATTERNS = 5000


def period_patterns(cm: CompactModel, t: int, slots: list) -> list:
    """Sign vectors over ``slots`` with at most ``B_S`` deviations (and none if ``B_T`` is 0)."""
    cap = min(cm.case.budgets.b_s, len(slots)) if cm.case.budgets.b_t > 0 else 0
    out = [()]
    for k in range(1, cap + 1):
        for sub in itertools.combinations(slots, k):
            for signs in itertools.product((1, -1), repeat=k):
                out.append(tuple(zip(sub, signs)))
    if len(out) > MAX_PATTERNS:
        raise TooLarge(f"{len(out)} deviation patterns in period {t + 1} exceed {MAX_PATTERNS}")
    return out


def solve_subproblem_decomposed(cm: CompactModel, plan, config: SolverConfig | None = None,
                                exogenous: bool = False) -> WorstCase:
    """Exact worst case by per-period vertex search.

    Given the plan the storage envelopes decouple the periods, so the
    recourse value is a sum of per-period LPs and only the temporal budget
    links them.  Every budget-feasible sign pattern of a period is priced
    with one small LP, then a small MILP picks one pattern per period under
    the per-prosumer budget.  Disconnected slots are never deviated since
    their deviation has no effect on the injection.
    """
    config = config or HIGHS
    case = cm.case
    J, T = case.J, case.T
    x = _split_plan(cm, plan)
    u = _u_of(cm, x)
    mid = midpoint(case)
    wh = half_width(case)
    base = cm.h - cm.C @ x
    priced = []
    for t in range(T):
        slots = [j for j in range(J) if u[j, t] > 0.5 and wh[j, t] > 0]
        vals = []
        for pat in period_patterns(cm, t, slots):
            w = np.zeros((J, T))
            w[:, t] = u[:, t] * mid[:, t]
            for j, sgn in pat:
                w[j, t] += sgn * wh[j, t]
            sol = solve_lp(cm.period_program(t, base - cm.T @ w.ravel()), config)
            if sol.status == Status.INFEASIBLE:
                raise SolverFailure(f"recourse infeasible in period {t + 1} for a vertex of the set: "
                                    "run the feasibility check first")
            if sol.status != Status.OPTIMAL:
                raise SolverFailure(f"period LP returned {sol.status.value}")
            vals.append((pat, sol.objective))
        priced.append(vals)

    # choose one pattern per period under the temporal budget
    cols = [(t, i) for t in range(T) for i in range(len(priced[t]))]
    c = np.array([-priced[t][i][1] for t, i in cols])
    rows, rr, vv = [], [], []
    for n_, (t, i) in enumerate(cols):
        rows.append(t)
        rr.append(n_)
        vv.append(1.0)
        for j, _ in priced[t][i][0]:
            rows.append(T + j)
            rr.append(n_)
            vv.append(1.0)
    A = sp.csr_matrix((vv, (rows, rr)), shape=(T + J, len(cols)))
    senses = np.concatenate([np.full(T, EQ), np.full(J, LE)])
    b = np.concatenate([np.ones(T), np.full(J, float(case.budgets.b_t))])
    n = len(cols)
    sol = solve_milp(from_arrays(c, A, senses, b, np.zeros(n), np.ones(n), np.ones(n, dtype=bool),
                                 name="pattern_choice"), config)
    if sol.status != Status.OPTIMAL:
        raise SolverFailure(f"pattern choice returned {sol.status.value}")
    zp = np.zeros((J, T))
    zm = np.zeros((J, T))
    for n_, (t, i) in enumerate(cols):
        if sol.x[n_] > 0.5:
            for j, sgn in priced[t][i][0]:
                (zp if sgn > 0 else zm)[j, t] = 1.0
    w_set = mid + wh * (zp - zm)
    value = -sol.objective
    return WorstCase(u * w_set, value, w_set, zp, zm, {"lps": sum(len(v) for v in priced)})
