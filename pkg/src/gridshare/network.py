"""Real-time recourse region: reserve redeployment, storage envelopes and a
linearized DistFlow model of a standalone radial feeder.

Two equivalent encodings are offered.  :class:`RecourseBlock` keeps every
flow, nodal injection and voltage as an explicit variable (used by the
compact robust model and by membership checks).  :class:`ReducedNetwork`
eliminates flows and voltages on the tree and keeps only the decision
variables (gas adjustments, storage powers, sharing quantities); the market
solves its small quadratic programs in this space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dispatch.plan import DayAheadPlan
from .errors import DimensionMismatch
from .model import MicrogridCase, nodal_map
from .solver import LE, EQ, GE, ProgramBuilder, SolverConfig, Status, solve_lp
from .solver.lp import farkas_margin


@dataclass(frozen=True)
class Tree:
    """Radial orientation of the case network (parent -> child per line)."""

    order: tuple          # bus positions in BFS order, root first
    parent: tuple         # parent position per bus position (-1 for root)
    parent_line: tuple    # line index joining a bus to its parent (-1 for root)
    children: tuple       # child positions per bus position
    line_child: tuple     # child bus position of each line
    line_parent: tuple    # parent bus position of each line

    @classmethod
    def build(cls, case: MicrogridCase) -> "Tree":
        idx = case.bus_index()
        nb = len(case.buses)
        adj = [[] for _ in range(nb)]
        for li, ln in enumerate(case.lines):
            a, b = idx[ln.from_bus], idx[ln.to_bus]
            adj[a].append((b, li))
            adj[b].append((a, li))
        root = idx[1]
        parent = [-1] * nb
        pline = [-1] * nb
        seen = [False] * nb
        seen[root] = True
        order = []
        queue = deque([root])
        while queue:
            n = queue.popleft()
            order.append(n)
            for m, li in sorted(adj[n]):
                if not seen[m]:
                    seen[m] = True
                    parent[m] = n
                    pline[m] = li
                    queue.append(m)
        children = [[] for _ in range(nb)]
        for m in range(nb):
            if parent[m] >= 0:
                children[parent[m]].append(m)
        lchild = [0] * len(case.lines)
        lpar = [0] * len(case.lines)
        for m in range(nb):
            if pline[m] >= 0:
                lchild[pline[m]] = m
                lpar[pline[m]] = parent[m]
        return cls(tuple(order), tuple(parent), tuple(pline), tuple(tuple(c) for c in children),
                   tuple(lchild), tuple(lpar))

    @property
    def root(self) -> int:
        return self.order[0]

    def subtree_matrix(self) -> np.ndarray:
        """S[l, b] = 1 when bus b lies in the subtree below line l."""
        nl, nb = len(self.line_child), len(self.parent)
        S = np.zeros((nl, nb))
        for b in range(nb):
            m = b
            while self.parent[m] >= 0:
                S[self.parent_line[m], b] = 1.0
                m = self.parent[m]
        return S

    def path_matrix(self) -> np.ndarray:
        """R[b, l] = 1 when line l lies on the path from the root to bus b."""
        return self.subtree_matrix().T


# ---------------------------------------------------------------------------
# symbolic rows shared by the full block and the compact model

@dataclass
class SymRow:
    """``sum y + sum x + sum w  (sense)  rhs`` with symbolic variable keys."""

    y: dict
    x: dict
    w: dict
    sense: int
    rhs: float
    name: str


@dataclass
class RecourseBlock:
    """Per-period recourse rows with explicit network variables.

    ``y_bounds`` holds constant box bounds of recourse variables; bounds that
    depend on the plan (reserve band, storage envelopes) are rows with ``x``
    coefficients so the same block serves the compact robust model.
    """

    t: int
    rows: list
    y_bounds: dict
    q_keys: list = field(default_factory=list)

    def census(self) -> dict:
        counts: dict = {}
        for r in self.rows:
            kind = r.name.split("[")[0]
            counts[kind] = counts.get(kind, 0) + 1
        return counts

    def program(self, plan: DayAheadPlan, q=None, cost: dict | None = None) -> tuple:
        """MathProgram with the plan substituted; returns (program, column map)."""
        bld = ProgramBuilder(f"recourse_t{self.t + 1}")
        col = {}
        for key, (lo, hi) in self.y_bounds.items():
            col[key] = bld.add_var(_name(key), lo, hi, (cost or {}).get(key, 0.0))
        if q is not None:
            q = np.asarray(q, dtype=float)
            if q.size != len(self.q_keys):
                raise DimensionMismatch(f"expected {len(self.q_keys)} sharing quantities, got {q.size}")
            for key, val in zip(self.q_keys, q):
                bld.set_bounds(col[key], val, val)
        for r in self.rows:
            const = sum(c * plan_value(plan, k) for k, c in r.x.items())
            if r.w:
                raise ValueError("recourse block rows must not carry renewable terms")
            bld.add_row({col[k]: c for k, c in r.y.items()}, r.sense, r.rhs - const, r.name)
        return bld.build(), col


def _name(key) -> str:
    return key[0] + "_" + "_".join(str(k) for k in key[1:])


def plan_value(plan: DayAheadPlan, key) -> float:
    nm, i, t = key
    return float(getattr(plan, nm)[i, t])


def recourse_rows(case: MicrogridCase, t: int, tree: Tree | None = None) -> RecourseBlock:
    """Symbolic rows of the recourse region for period index ``t`` (0-based)."""
    tree = tree or Tree.build(case)
    amap = nodal_map(case)
    rows: list[SymRow] = []
    yb: dict = {}
    for g in range(len(case.gas_units)):
        yb[("delta", g, t)] = (-np.inf, np.inf)
    for e in range(len(case.storages)):
        yb[("pc", e, t)] = (-np.inf, np.inf)
        yb[("pd", e, t)] = (-np.inf, np.inf)
    q_keys = [("q", k, t) for k in range(len(case.customers))]
    for key in q_keys:
        yb[key] = (-np.inf, np.inf)
    for b in range(len(case.buses)):
        yb[("Pb", b, t)] = (-np.inf, np.inf)
        yb[("Qb", b, t)] = (-np.inf, np.inf)
    for li, ln in enumerate(case.lines):
        yb[("Pl", li, t)] = (-ln.p_max, ln.p_max)
        yb[("Ql", li, t)] = (-ln.q_max, ln.q_max)
    for b, bus in enumerate(case.buses):
        if b == tree.root:
            yb[("v", b, t)] = (case.v_ref, case.v_ref)
        else:
            yb[("v", b, t)] = (bus.v_min, bus.v_max)

    # reserve band and storage envelopes (plan-dependent bounds)
    for g in range(len(case.gas_units)):
        rows.append(SymRow({("delta", g, t): 1.0}, {("r", g, t): 1.0}, {}, GE, 0.0, f"reserve_lo[{g},{t}]"))
        rows.append(SymRow({("delta", g, t): -1.0}, {("r", g, t): 1.0}, {}, GE, 0.0, f"reserve_hi[{g},{t}]"))
    for e in range(len(case.storages)):
        rows.append(SymRow({("pc", e, t): 1.0}, {("pcl", e, t): -1.0}, {}, GE, 0.0, f"charge_lo[{e},{t}]"))
        rows.append(SymRow({("pc", e, t): -1.0}, {("pch", e, t): 1.0}, {}, GE, 0.0, f"charge_hi[{e},{t}]"))
        rows.append(SymRow({("pd", e, t): 1.0}, {("pdl", e, t): -1.0}, {}, GE, 0.0, f"discharge_lo[{e},{t}]"))
        rows.append(SymRow({("pd", e, t): -1.0}, {("pdh", e, t): 1.0}, {}, GE, 0.0, f"discharge_hi[{e},{t}]"))

    # nodal balances: P_b = P0 - sum gas (P + delta) + sum q - sum (pd - pc)
    for b, bus in enumerate(case.buses):
        att = amap.at(bus.id)
        y = {("Pb", b, t): 1.0}
        x = {}
        for g in att["gas"]:
            y[("delta", g, t)] = 1.0
            x[("P", g, t)] = 1.0
        for k in att["customers"]:
            y[("q", k, t)] = -1.0
        for e in att["storages"]:
            y[("pd", e, t)] = 1.0
            y[("pc", e, t)] = -1.0
        rows.append(SymRow(y, x, {}, EQ, bus.load_p[t], f"balance_p[{b},{t}]"))
        xq = {("Q", g, t): 1.0 for g in att["gas"]}
        rows.append(SymRow({("Qb", b, t): 1.0}, xq, {}, EQ, bus.load_q[t], f"balance_q[{b},{t}]"))

    # flow conservation on each line (parent n -> child b)
    for li in range(len(case.lines)):
        b = tree.line_child[li]
        yp = {("Pl", li, t): 1.0, ("Pb", b, t): -1.0}
        yq = {("Ql", li, t): 1.0, ("Qb", b, t): -1.0}
        for c in tree.children[b]:
            yp[("Pl", tree.parent_line[c], t)] = -1.0
            yq[("Ql", tree.parent_line[c], t)] = -1.0
        rows.append(SymRow(yp, {}, {}, EQ, 0.0, f"flow_p[{li},{t}]"))
        rows.append(SymRow(yq, {}, {}, EQ, 0.0, f"flow_q[{li},{t}]"))

    # the feeder is islanded: the root injection is balanced by its lines
    root = tree.root
    yp = {("Pb", root, t): 1.0}
    yq = {("Qb", root, t): 1.0}
    for c in tree.children[root]:
        yp[("Pl", tree.parent_line[c], t)] = 1.0
        yq[("Ql", tree.parent_line[c], t)] = 1.0
    rows.append(SymRow(yp, {}, {}, EQ, 0.0, f"closure_p[{t}]"))
    rows.append(SymRow(yq, {}, {}, EQ, 0.0, f"closure_q[{t}]"))

    # voltage drop v_b = v_n - (r P + x Q)
    for li, ln in enumerate(case.lines):
        b, n = tree.line_child[li], tree.line_parent[li]
        y = {("v", n, t): 1.0, ("v", b, t): -1.0}
        if ln.r:
            y[("Pl", li, t)] = -ln.r
        if ln.x:
            y[("Ql", li, t)] = -ln.x
        rows.append(SymRow(y, {}, {}, EQ, 0.0, f"voltage[{li},{t}]"))
    return RecourseBlock(t, rows, yb, q_keys)


def build_recourse(case: MicrogridCase, plan: DayAheadPlan, t: int) -> RecourseBlock:
    """Recourse block of period ``t`` (0-based) checked against the plan's dimensions."""
    plan.check_shape(case)
    if not 0 <= t < case.horizon:
        raise DimensionMismatch(f"period index {t} outside 0..{case.horizon - 1}")
    return recourse_rows(case, t)


@dataclass
class Membership:
    member: bool
    point: dict | None = None
    certificate: np.ndarray | None = None
    margin: float = 0.0


def check_membership(case: MicrogridCase, plan: DayAheadPlan, t: int, q, config: SolverConfig | None = None) -> Membership:
    """Is the sharing vector ``q`` deliverable by the recourse of period ``t``?"""
    q = np.asarray(q, dtype=float)
    if q.size != len(case.customers):
        raise DimensionMismatch(f"expected {len(case.customers)} sharing quantities, got {q.size}")
    block = build_recourse(case, plan, t)
    prog, col = block.program(plan, q)
    sol = solve_lp(prog, config)
    if sol.status == Status.OPTIMAL:
        return Membership(True, {k: float(sol.x[j]) for k, j in col.items()})
    return Membership(False, certificate=sol.farkas,
                      margin=farkas_margin(prog, sol.farkas) if sol.farkas is not None else 0.0)


# ---------------------------------------------------------------------------
# reduced encoding

class ReducedNetwork:
    """Recourse region of one period in the variables (delta, pc, pd, q).

    Flows and voltages are affine in these variables on a radial tree:
    ``Pl = S p`` with ``p`` the nodal net loads, and
    ``v = V0 - R (r * Pl + x * Ql)``.  Reactive flows do not depend on the
    decision variables, so their limits are checked once as constants.
    Rows are returned as ``A z (sense) b``.
    """

    def __init__(self, case: MicrogridCase, plan: DayAheadPlan, t: int, tree: Tree | None = None):
        plan.check_shape(case)
        self.case = case
        self.t = t
        tree = tree or Tree.build(case)
        self.tree = tree
        amap = nodal_map(case)
        nb, nl = len(case.buses), len(case.lines)
        G, E, K = len(case.gas_units), len(case.storages), len(case.customers)
        self.G, self.E, self.K = G, E, K
        self.nz = G + 2 * E + K
        self.sl_delta = slice(0, G)
        self.sl_pc = slice(G, G + E)
        self.sl_pd = slice(G + E, G + 2 * E)
        self.sl_q = slice(G + 2 * E, self.nz)

        lo = np.zeros(self.nz)
        hi = np.zeros(self.nz)
        lo[self.sl_delta] = -plan.r[:, t]
        hi[self.sl_delta] = plan.r[:, t]
        lo[self.sl_pc] = plan.pcl[:, t]
        hi[self.sl_pc] = plan.pch[:, t]
        lo[self.sl_pd] = plan.pdl[:, t]
        hi[self.sl_pd] = plan.pdh[:, t]
        lo[self.sl_q] = -np.inf
        hi[self.sl_q] = np.inf
        self.lb, self.ub = lo, hi

        # nodal net load p = p0 + N z,  reactive net load is constant
        p0 = np.array([bus.load_p[t] for bus in case.buses])
        q0 = np.array([bus.load_q[t] for bus in case.buses])
        N = np.zeros((nb, self.nz))
        for b, bus in enumerate(case.buses):
            att = amap.at(bus.id)
            for g in att["gas"]:
                p0[b] -= plan.P[g, t]
                q0[b] -= plan.Q[g, t]
                N[b, g] = -1.0
            for e in att["storages"]:
                N[b, self.sl_pc.start + e] = 1.0
                N[b, self.sl_pd.start + e] = -1.0
            for k in att["customers"]:
                N[b, self.sl_q.start + k] = 1.0
        S = tree.subtree_matrix() if nl else np.zeros((0, nb))
        R = S.T
        rr = np.array([ln.r for ln in case.lines])
        xx = np.array([ln.x for ln in case.lines])
        pmax = np.array([ln.p_max for ln in case.lines])
        qmax = np.array([ln.q_max for ln in case.lines])
        Ql = S @ q0 if nl else np.zeros(0)
        vmin = np.array([bus.v_min for bus in case.buses])
        vmax = np.array([bus.v_max for bus in case.buses])

        A_rows, b_rows, senses, names = [], [], [], []
        # closure: total net load is zero
        A_rows.append(N.sum(axis=0))
        b_rows.append(-p0.sum())
        senses.append(EQ)
        names.append("closure_p")
        # line limits |S (p0 + N z)| <= pmax
        if nl:
            SN = S @ N
            Sp0 = S @ p0
            for li in range(nl):
                A_rows.append(SN[li]); b_rows.append(pmax[li] - Sp0[li]); senses.append(LE); names.append(f"line_hi[{li}]")
                A_rows.append(SN[li]); b_rows.append(-pmax[li] - Sp0[li]); senses.append(GE); names.append(f"line_lo[{li}]")
            # voltages: v = V0 - R (r * (Sp0 + SN z) + x * Ql)
            Vc = case.v_ref - R @ (rr * Sp0 + xx * Ql)
            Vz = -R @ (rr[:, None] * SN)
            for b in range(nb):
                if b == tree.root or not np.any(Vz[b]) and vmin[b] <= Vc[b] <= vmax[b]:
                    continue
                A_rows.append(Vz[b]); b_rows.append(vmax[b] - Vc[b]); senses.append(LE); names.append(f"volt_hi[{b}]")
                A_rows.append(Vz[b]); b_rows.append(vmin[b] - Vc[b]); senses.append(GE); names.append(f"volt_lo[{b}]")
        self.A = np.array(A_rows).reshape(-1, self.nz)
        self.b = np.array(b_rows, dtype=float)
        self.senses = np.array(senses, dtype=np.int8)
        self.names = names
        # reactive flows are constants: check their limits and the closure once
        self.reactive_ok = abs(q0.sum()) <= 1e-7 and bool(np.all(np.abs(Ql) <= qmax + 1e-9))
        self._S, self._R, self._N, self._p0, self._q0 = S, R, N, p0, q0
        self._rr, self._xx = rr, xx

    def add_to(self, bld: ProgramBuilder, cols: list[int] | None = None) -> list[int]:
        """Append variables (unless ``cols`` given) and rows to a builder; returns column ids."""
        if cols is None:
            cols = []
            for j in range(self.nz):
                cols.append(bld.add_var(self.var_name(j), self.lb[j], self.ub[j]))
        for i in range(self.A.shape[0]):
            bld.add_row([(cols[j], self.A[i, j]) for j in np.flatnonzero(self.A[i])], int(self.senses[i]),
                        self.b[i], self.names[i])
        if not self.reactive_ok:
            # an unsatisfiable constant row keeps the program honestly infeasible
            bld.add_row([(cols[0], 0.0)] if cols else [], EQ, 1.0, "reactive_infeasible")
        return cols

    def var_name(self, j: int) -> str:
        if j < self.G:
            return f"delta_{j}"
        if j < self.G + self.E:
            return f"pc_{j - self.G}"
        if j < self.G + 2 * self.E:
            return f"pd_{j - self.G - self.E}"
        return f"q_{j - self.G - 2 * self.E}"

    def expand(self, z: np.ndarray) -> dict:
        """Recover flows and voltages for a reduced point ``z``."""
        p = self._p0 + self._N @ z
        Pl = self._S @ p
        Ql = self._S @ self._q0
        v = self.case.v_ref - self._R @ (self._rr * Pl + self._xx * Ql) if len(Pl) else np.full(len(p), self.case.v_ref)
        return {"delta": z[self.sl_delta], "pc": z[self.sl_pc], "pd": z[self.sl_pd], "q": z[self.sl_q],
                "P_bus": p, "Q_bus": self._q0.copy(), "P_line": Pl, "Q_line": Ql, "v": v}
