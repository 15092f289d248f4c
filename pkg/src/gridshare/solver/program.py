"""Program representation shared by the native kernel and the HiGHS backend.

Sign convention for dual values (used everywhere in the package): for a
minimisation, the dual ``y_i`` of row ``i`` is the sensitivity of the optimal
objective to its right-hand side, ``y_i = d obj / d b_i``.  Hence ``<=`` rows
carry ``y <= 0``, ``>=`` rows carry ``y >= 0`` and ``==`` rows are free.  The
Lagrangian is ``f(x) - sum_i y_i (a_i x - b_i)``.  Reduced costs follow the
same rule for variable bounds: ``rc_j = df/dx_j - a_j^T y`` is ``>= 0`` at an
active lower bound and ``<= 0`` at an active upper bound.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = -1, 0, 1
_SENSE_ALIASES = {"<=": LE, "<": LE, "L": LE, "==": EQ, "=": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE}


def parse_sense(sense) -> int:
    if sense in (LE, EQ, GE):
        return int(sense)
    try:
        return _SENSE_ALIASES[sense]
    except KeyError:
        raise ValueError(f"unknown constraint sense {sense!r}") from None


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITER_LIMIT = "IterLimit"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-7
    gap_tol: float = 1e-8
    int_tol: float = 1e-6
    mip_gap: float = 1e-8
    kkt_tol: float = 1e-7
    max_pivots: int = 10**6
    max_nodes: int = 10**5
    stall_limit: int = 30
    refactor_every: int = 60
    backend: str = "native"
    time_limit: float | None = None

    def with_backend(self, backend: str) -> "SolverConfig":
        from dataclasses import replace

        return replace(self, backend=backend)


@dataclass(frozen=True)
class MathProgram:
    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    qdiag: np.ndarray | None = None
    obj_const: float = 0.0
    var_names: list[str] | None = None
    row_names: list[str] | None = None
    name: str = "program"

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def has_integers(self) -> bool:
        return bool(np.any(self.integer))

    @property
    def has_quadratic(self) -> bool:
        return self.qdiag is not None and bool(np.any(self.qdiag != 0.0))

    def objective(self, x: np.ndarray) -> float:
        val = float(self.c @ x) + self.obj_const
        if self.qdiag is not None:
            val += float(self.qdiag @ (x * x))
        return val

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.A @ x).ravel()

    def primal_residual(self, x: np.ndarray) -> float:
        """Largest violation of any row or bound at ``x`` (0 when feasible)."""
        act = self.row_activity(x)
        viol = np.zeros(self.m)
        le = self.senses == LE
        ge = self.senses == GE
        eq = self.senses == EQ
        viol[le] = np.maximum(act[le] - self.b[le], 0.0)
        viol[ge] = np.maximum(self.b[ge] - act[ge], 0.0)
        viol[eq] = np.abs(act[eq] - self.b[eq])
        bviol = np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)
        worst = 0.0
        if viol.size:
            worst = max(worst, float(viol.max()))
        if bviol.size:
            worst = max(worst, float(bviol.max()))
        return worst

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "MathProgram":
        from dataclasses import replace

        return replace(self, lb=lb, ub=ub)

    def relaxed(self) -> "MathProgram":
        from dataclasses import replace

        return replace(self, integer=np.zeros(self.n, dtype=bool))

    def validate(self) -> None:
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"variable {j} has lb > ub")
        if self.qdiag is not None and np.any(self.qdiag < 0):
            from ..errors import NotConvex

            raise NotConvex("quadratic coefficients must be non-negative")
        if self.A.shape != (self.m, self.n):
            raise ValueError("constraint matrix shape does not match program dimensions")


@dataclass
class ProgramSolution:
    status: Status
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    farkas: np.ndarray | None = None
    ray: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


class ProgramBuilder:
    """Incremental construction of a :class:`MathProgram` from named pieces."""

    def __init__(self, name: str = "program"):
        self.name = name
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._q: list[float] = []
        self._vnames: list[str] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._senses: list[int] = []
        self._rhs: list[float] = []
        self._rnames: list[str] = []
        self.obj_const = 0.0

    @property
    def n(self) -> int:
        return len(self._c)

    @property
    def m(self) -> int:
        return len(self._rhs)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, cost: float = 0.0,
                integer: bool = False, quad: float = 0.0) -> int:
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(bool(integer))
        self._q.append(float(quad))
        self._vnames.append(name)
        return len(self._c) - 1

    def set_cost(self, j: int, cost: float) -> None:
        self._c[j] = float(cost)

    def add_cost(self, j: int, cost: float) -> None:
        self._c[j] += float(cost)

    def set_quad(self, j: int, quad: float) -> None:
        self._q[j] = float(quad)

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        self._lb[j] = float(lb)
        self._ub[j] = float(ub)

    def add_row(self, coeffs, sense, rhs: float, name: str = "") -> int:
        """Append a row. ``coeffs`` is a mapping or an iterable of (col, value)."""
        i = len(self._rhs)
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for j, v in items:
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(int(j))
                self._vals.append(float(v))
        self._senses.append(parse_sense(sense))
        self._rhs.append(float(rhs))
        self._rnames.append(name)
        return i

    def build(self) -> MathProgram:
        n, m = self.n, self.m
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        A.sum_duplicates()
        q = np.array(self._q, dtype=float)
        return MathProgram(
            c=np.array(self._c, dtype=float),
            A=A,
            senses=np.array(self._senses, dtype=np.int8),
            b=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            integer=np.array(self._int, dtype=bool),
            qdiag=q if np.any(q != 0.0) else None,
            obj_const=self.obj_const,
            var_names=list(self._vnames),
            row_names=list(self._rnames),
            name=self.name,
        )


def from_arrays(c, A=None, senses=None, b=None, lb=None, ub=None, integer=None, qdiag=None,
                obj_const: float = 0.0, name: str = "program") -> MathProgram:
    """Convenience constructor from dense or sparse arrays."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    if A is None:
        A = sp.csr_matrix((0, n))
        senses = np.zeros(0, dtype=np.int8)
        b = np.zeros(0)
    A = sp.csr_matrix(A, dtype=float)
    m = A.shape[0]
    if senses is None:
        senses = np.full(m, LE, dtype=np.int8)
    elif isinstance(senses, (str, int)):
        senses = np.full(m, parse_sense(senses), dtype=np.int8)
    else:
        senses = np.array([parse_sense(s) for s in senses], dtype=np.int8)
    b = np.asarray(b, dtype=float).ravel()
    lb = np.zeros(n) if lb is None else np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy()
    ub = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy()
    integer = np.zeros(n, dtype=bool) if integer is None else np.asarray(integer, dtype=bool)
    if qdiag is not None:
        qdiag = np.asarray(qdiag, dtype=float).ravel()
    return MathProgram(c=c, A=A, senses=senses, b=b, lb=lb, ub=ub, integer=integer,
                       qdiag=qdiag, obj_const=obj_const, name=name)
