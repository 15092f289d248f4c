"""Domain types for a standalone microgrid and the YAML case-file format.

Case files are YAML documents with a ``schema_version`` key and the sections
``market``, ``budgets``, ``network`` (``buses``/``lines``), ``gas_units``,
``storages`` and ``customers``.  Per-period fields are lists of length
``horizon``; a scalar is accepted on input and broadcast.  Voltages are
squared magnitudes in p.u.; powers are MW/MVAr; periods are numbered
1..T in diagnostics.
"""

from __future__ import annotations

import dataclasses
import math
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ParseError, ValidationError

SCHEMA_VERSION = 1


def _vec(x) -> tuple:
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class Bus:
    id: int
    load_p: tuple
    load_q: tuple
    v_min: float = 0.81
    v_max: float = 1.21


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float
    x: float
    p_max: float
    q_max: float


@dataclass(frozen=True)
class GasUnit:
    bus: int
    c: float
    s: float
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    name: str = ""


@dataclass(frozen=True)
class Storage:
    bus: int
    eta_c: float
    eta_d: float
    pc_min: float
    pc_max: float
    pd_min: float
    pd_max: float
    e_min: float
    e_max: float
    e0: float
    delta_e: float
    name: str = ""


@dataclass(frozen=True)
class Customer:
    kind: str
    bus: int
    a1: float
    a2: float
    a3: float
    d_fixed: tuple
    d_lo: tuple
    d_hi: tuple
    w_lo: tuple | None = None
    w_hi: tuple | None = None
    alpha: tuple | None = None
    name: str = ""

    @property
    def is_prosumer(self) -> bool:
        return self.kind == "prosumer"

    def disutility(self, d):
        return self.a1 * np.square(d) - self.a2 * np.asarray(d) + self.a3


@dataclass(frozen=True)
class UncertaintyBudget:
    b_s: int
    b_t: int


@dataclass(frozen=True)
class MicrogridCase:
    buses: tuple
    lines: tuple
    gas_units: tuple
    storages: tuple
    customers: tuple
    horizon: int
    step: float
    market_sensitivity: float
    budgets: UncertaintyBudget
    pwl_points: int = 10
    v_ref: float = 1.0
    strict_reserve: bool = False
    name: str = "case"

    # convenience views -------------------------------------------------
    @property
    def T(self) -> int:
        return self.horizon

    @property
    def prosumers(self) -> list[int]:
        """Customer indices of prosumers, in file order."""
        return [k for k, c in enumerate(self.customers) if c.is_prosumer]

    @property
    def J(self) -> int:
        return len(self.prosumers)

    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def w_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(W_lo, W_hi) as J x T arrays over prosumers."""
        lo = np.array([self.customers[k].w_lo for k in self.prosumers], dtype=float).reshape(self.J, self.T)
        hi = np.array([self.customers[k].w_hi for k in self.prosumers], dtype=float).reshape(self.J, self.T)
        return lo, hi

    def alpha(self) -> np.ndarray:
        return np.array([self.customers[k].alpha for k in self.prosumers], dtype=float).reshape(self.J, self.T)

    def replace(self, **kw) -> "MicrogridCase":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class AttachmentMap:
    gas: dict
    storages: dict
    customers: dict

    def at(self, bus: int) -> dict:
        return {"gas": self.gas.get(bus, []), "storages": self.storages.get(bus, []),
                "customers": self.customers.get(bus, [])}


def nodal_map(case: MicrogridCase) -> AttachmentMap:
    """Index sets of gas units, storages and customers attached to each bus."""
    gas = {b.id: [] for b in case.buses}
    sto = {b.id: [] for b in case.buses}
    cus = {b.id: [] for b in case.buses}
    for i, g in enumerate(case.gas_units):
        gas[g.bus].append(i)
    for i, e in enumerate(case.storages):
        sto[e.bus].append(i)
    for i, c in enumerate(case.customers):
        cus[c.bus].append(i)
    return AttachmentMap(gas, sto, cus)


# validation ---------------------------------------------------------------

def _radial_problem(case: MicrogridCase) -> str | None:
    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        return "bus ids must be unique"
    if 1 not in ids:
        return "network must contain root bus 1"
    adj = {i: [] for i in ids}
    for ln in case.lines:
        if ln.from_bus not in adj or ln.to_bus not in adj:
            return None  # reported per line elsewhere
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    if len(case.lines) != len(ids) - 1:
        return "network must be radial"
    seen = {1}
    queue = deque([1])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    if len(seen) != len(ids):
        return "network must be radial"
    return None


def validate_case(case: MicrogridCase) -> list[str]:
    """One diagnostic string per violated invariant; empty when valid."""
    out: list[str] = []
    T = case.horizon
    if not isinstance(T, int) or T < 1:
        out.append("horizon must be a positive integer")
        T = max(int(T) if isinstance(T, (int, float)) else 1, 1)
    if not case.market_sensitivity > 0:
        out.append("market_sensitivity must be positive")
    if not case.step > 0:
        out.append("step must be positive")
    if not (isinstance(case.pwl_points, int) and case.pwl_points >= 2):
        out.append("pwl_points must be an integer >= 2")
    ids = {b.id for b in case.buses}
    for i, b in enumerate(case.buses):
        if b.v_min > b.v_max:
            out.append(f"bus[{i}].v_min exceeds v_max")
        if len(b.load_p) != T or len(b.load_q) != T:
            out.append(f"bus[{i}] load arrays must have length {T}")
    for i, ln in enumerate(case.lines):
        if ln.from_bus not in ids or ln.to_bus not in ids:
            out.append(f"line[{i}] references an unknown bus")
        if not ln.p_max > 0:
            out.append(f"line[{i}].p_max must be positive")
        if not ln.q_max > 0:
            out.append(f"line[{i}].q_max must be positive")
        if ln.r < 0:
            out.append(f"line[{i}].r must be non-negative")
        if not math.isfinite(ln.x):
            out.append(f"line[{i}].x must be finite")
    rad = _radial_problem(case)
    if rad:
        out.append(rad)
    for i, g in enumerate(case.gas_units):
        if g.bus not in ids:
            out.append(f"gas_unit[{i}] references an unknown bus")
        if g.p_min > g.p_max:
            out.append(f"gas_unit[{i}].p_min exceeds p_max")
        if g.q_min > g.q_max:
            out.append(f"gas_unit[{i}].q_min exceeds q_max")
        if g.c < 0:
            out.append(f"gas_unit[{i}].c must be non-negative")
        if g.s < 0:
            out.append(f"gas_unit[{i}].s must be non-negative")
    for i, e in enumerate(case.storages):
        if e.bus not in ids:
            out.append(f"storage[{i}] references an unknown bus")
        if not 0 < e.eta_c <= 1:
            out.append(f"storage[{i}].eta_c must lie in (0, 1]")
        if not 0 < e.eta_d <= 1:
            out.append(f"storage[{i}].eta_d must lie in (0, 1]")
        if e.pc_min > e.pc_max:
            out.append(f"storage[{i}].pc_min exceeds pc_max")
        if e.pd_min > e.pd_max:
            out.append(f"storage[{i}].pd_min exceeds pd_max")
        if e.e_min > e.e_max:
            out.append(f"storage[{i}].e_min exceeds e_max")
        if e.e0 > e.e_max:
            out.append(f"storage[{i}].e0 exceeds e_max")
        if e.e0 < e.e_min:
            out.append(f"storage[{i}].e0 below e_min")
        if e.delta_e < 0:
            out.append(f"storage[{i}].delta_e must be non-negative")
    for k, c in enumerate(case.customers):
        tag = f"customer[{k}]"
        if c.kind not in ("consumer", "prosumer"):
            out.append(f"{tag}.kind must be consumer or prosumer")
        if c.bus not in ids:
            out.append(f"{tag} references an unknown bus")
        if not c.a1 > 0:
            out.append(f"{tag}.a1 must be positive")
        for nm in ("d_fixed", "d_lo", "d_hi"):
            if len(getattr(c, nm)) != T:
                out.append(f"{tag}.{nm} must have length {T}")
        for t, (lo, hi) in enumerate(zip(c.d_lo, c.d_hi)):
            if lo > hi:
                out.append(f"{tag}.d range inverted at t={t + 1}")
        if c.kind == "prosumer":
            if c.w_lo is None or c.w_hi is None or c.alpha is None:
                out.append(f"{tag} prosumer requires w_lo, w_hi and alpha")
                continue
            if len(c.w_lo) != T or len(c.w_hi) != T or len(c.alpha) != T:
                out.append(f"{tag} renewable arrays must have length {T}")
                continue
            for t, (lo, hi) in enumerate(zip(c.w_lo, c.w_hi)):
                if lo < 0:
                    out.append(f"{tag}.w_lo negative at t={t + 1}")
                if lo > hi:
                    out.append(f"{tag}.w interval inverted at t={t + 1}")
        elif c.kind == "consumer":
            if c.w_lo is not None or c.w_hi is not None:
                out.append(f"{tag} consumer must not carry renewable fields")
    bud = case.budgets
    nj = sum(1 for c in case.customers if c.kind == "prosumer")
    for nm, val, cap in (("b_s", bud.b_s, nj), ("b_t", bud.b_t, T)):
        if isinstance(val, float) and not float(val).is_integer():
            out.append(f"budgets.{nm} must be an integer (fractional budgets are not supported)")
        elif not 0 <= val <= cap:
            out.append(f"budgets.{nm} must lie in [0, {cap}]")
    return out


def check_case(case: MicrogridCase) -> MicrogridCase:
    diags = validate_case(case)
    if diags:
        raise ValidationError(diags[0])
    return case


# parameter sweeps -----------------------------------------------------------

def scale_elastic(case: MicrogridCase, factor: float) -> MicrogridCase:
    """Elastic ranges become ``[(2 - factor) D_lo, factor D_hi]``; factor 1 is the identity."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    custs = tuple(dataclasses.replace(c, d_lo=tuple(float(v) * (2.0 - factor) for v in c.d_lo),
                                      d_hi=tuple(float(v) * factor for v in c.d_hi)) for c in case.customers)
    return check_case(case.replace(customers=custs))


def scale_renewable(case: MicrogridCase, spread: float) -> MicrogridCase:
    """Renewable intervals become ``[(1 - spread), (1 + spread)]`` times their midpoints."""
    if not 0 <= spread <= 1:
        raise ValueError("spread must lie in [0, 1]")
    custs = []
    for c in case.customers:
        if c.is_prosumer:
            mid = 0.5 * (np.asarray(c.w_lo, dtype=float) + np.asarray(c.w_hi, dtype=float))
            c = dataclasses.replace(c, w_lo=tuple(mid * (1 - spread)), w_hi=tuple(mid * (1 + spread)))
        custs.append(c)
    return check_case(case.replace(customers=tuple(custs)))


# file format --------------------------------------------------------------

def _per_period(raw, T: int, what: str) -> tuple:
    if raw is None:
        raise ParseError(f"missing field {what}")
    if isinstance(raw, (int, float)):
        return tuple([float(raw)] * T)
    if not isinstance(raw, list):
        raise ParseError(f"{what} must be a number or a list")
    return _vec(raw)


def _get(d: dict, key: str, what: str):
    if not isinstance(d, dict) or key not in d:
        raise ParseError(f"missing field {what}.{key}")
    return d[key]


def case_from_dict(doc: dict) -> MicrogridCase:
    if not isinstance(doc, dict):
        raise ParseError("case document must be a mapping")
    ver = doc.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})")
    try:
        mk = doc["market"]
        T = int(_get(mk, "horizon", "market"))
        net = doc.get("network", {}) or {}
        buses = tuple(
            Bus(int(b["id"]), _per_period(b.get("load_p", 0.0), T, f"bus {b['id']}.load_p"),
                _per_period(b.get("load_q", 0.0), T, f"bus {b['id']}.load_q"),
                float(b.get("v_min", 0.81)), float(b.get("v_max", 1.21)))
            for b in net.get("buses", []) or []
        )
        lines = tuple(
            Line(int(ln["from"]), int(ln["to"]), float(ln["r"]), float(ln["x"]),
                 float(ln["p_max"]), float(ln["q_max"]))
            for ln in net.get("lines", []) or []
        )
        gas = tuple(
            GasUnit(int(g["bus"]), float(g["c"]), float(g["s"]), float(g["p_min"]), float(g["p_max"]),
                    float(g["q_min"]), float(g["q_max"]), str(g.get("name", f"gas{i + 1}")))
            for i, g in enumerate(doc.get("gas_units", []) or [])
        )
        stor = tuple(
            Storage(int(e["bus"]), float(e["eta_c"]), float(e["eta_d"]), float(e["pc_min"]), float(e["pc_max"]),
                    float(e["pd_min"]), float(e["pd_max"]), float(e["e_min"]), float(e["e_max"]),
                    float(e["e0"]), float(e["delta_e"]), str(e.get("name", f"ess{i + 1}")))
            for i, e in enumerate(doc.get("storages", []) or [])
        )
        custs = []
        for i, c in enumerate(doc.get("customers", []) or []):
            kind = str(c["kind"])
            tag = f"customer {i}"
            pros = kind == "prosumer"
            custs.append(Customer(
                kind=kind, bus=int(c["bus"]), a1=float(c["a1"]), a2=float(c["a2"]), a3=float(c["a3"]),
                d_fixed=_per_period(c.get("d_fixed", 0.0), T, f"{tag}.d_fixed"),
                d_lo=_per_period(c.get("d_lo"), T, f"{tag}.d_lo"),
                d_hi=_per_period(c.get("d_hi"), T, f"{tag}.d_hi"),
                w_lo=_per_period(c.get("w_lo"), T, f"{tag}.w_lo") if pros or "w_lo" in c else None,
                w_hi=_per_period(c.get("w_hi"), T, f"{tag}.w_hi") if pros or "w_hi" in c else None,
                alpha=_per_period(c.get("alpha"), T, f"{tag}.alpha") if pros else None,
                name=str(c.get("name", f"{kind}{i + 1}")),
            ))
        bud = doc.get("budgets", {}) or {}
        bs, bt = bud.get("spatial", 0), bud.get("temporal", 0)
        case = MicrogridCase(
            buses=buses, lines=lines, gas_units=gas, storages=stor, customers=tuple(custs),
            horizon=T, step=float(mk.get("step_hours", 1.0)),
            market_sensitivity=float(_get(mk, "sensitivity", "market")),
            budgets=UncertaintyBudget(int(bs) if float(bs).is_integer() else float(bs),
                                      int(bt) if float(bt).is_integer() else float(bt)),
            pwl_points=int(mk.get("pwl_points", 10)), v_ref=float(mk.get("v_ref", 1.0)),
            strict_reserve=bool(mk.get("strict_reserve", False)), name=str(doc.get("name", "case")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed case: {exc}") from exc
    return case


def case_to_dict(case: MicrogridCase) -> dict:
    def lst(v):
        return [float(x) for x in v]

    custs = []
    for c in case.customers:
        d = {"name": c.name, "kind": c.kind, "bus": c.bus, "a1": c.a1, "a2": c.a2, "a3": c.a3,
             "d_fixed": lst(c.d_fixed), "d_lo": lst(c.d_lo), "d_hi": lst(c.d_hi)}
        if c.w_lo is not None:
            d["w_lo"] = lst(c.w_lo)
            d["w_hi"] = lst(c.w_hi)
        if c.alpha is not None:
            d["alpha"] = lst(c.alpha)
        custs.append(d)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": case.name,
        "market": {"sensitivity": case.market_sensitivity, "horizon": case.horizon, "step_hours": case.step,
                   "pwl_points": case.pwl_points, "v_ref": case.v_ref, "strict_reserve": case.strict_reserve},
        "budgets": {"spatial": case.budgets.b_s, "temporal": case.budgets.b_t},
        "network": {
            "buses": [{"id": b.id, "load_p": lst(b.load_p), "load_q": lst(b.load_q), "v_min": b.v_min,
                       "v_max": b.v_max} for b in case.buses],
            "lines": [{"from": ln.from_bus, "to": ln.to_bus, "r": ln.r, "x": ln.x, "p_max": ln.p_max,
                       "q_max": ln.q_max} for ln in case.lines],
        },
        "gas_units": [{"name": g.name, "bus": g.bus, "c": g.c, "s": g.s, "p_min": g.p_min, "p_max": g.p_max,
                       "q_min": g.q_min, "q_max": g.q_max} for g in case.gas_units],
        "storages": [{"name": e.name, "bus": e.bus, "eta_c": e.eta_c, "eta_d": e.eta_d, "pc_min": e.pc_min,
                      "pc_max": e.pc_max, "pd_min": e.pd_min, "pd_max": e.pd_max, "e_min": e.e_min,
                      "e_max": e.e_max, "e0": e.e0, "delta_e": e.delta_e} for e in case.storages],
        "customers": custs,
    }


def serialize(case: MicrogridCase, header: str = "") -> str:
    text = yaml.safe_dump(case_to_dict(case), sort_keys=False, default_flow_style=None, width=100)
    if header:
        text = "".join(f"# {ln}\n" if ln else "#\n" for ln in header.splitlines()) + text
    return text


def bundled_case_path(name: str) -> Path:
    return Path(str(resources.files("gridshare") / "cases" / f"{name}.yaml"))


def resolve_case_path(path) -> Path:
    """Accept a file path or the bare name of a bundled case (e.g. ``benchmark33``)."""
    p = Path(path)
    if p.exists():
        return p
    cand = bundled_case_path(str(path).removesuffix(".yaml"))
    if cand.exists():
        return cand
    raise ParseError(f"case file not found: {path}")


def load_case(path) -> MicrogridCase:
    p = resolve_case_path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse {p}: {exc}") from exc
    return check_case(case_from_dict(doc))


def loads_case(text: str) -> MicrogridCase:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse case text: {exc}") from exc
    return check_case(case_from_dict(doc))
