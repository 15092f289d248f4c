"""First-stage decision container and its long-format CSV file.

A plan file has the header ``field,index,period,value`` and one line per
scalar entry; ``index`` is the 0-based position of the prosumer, gas unit
or storage, ``period`` runs from 1 to T.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields

import numpy as np

from ..errors import DimensionMismatch, ParseError
from ..model import MicrogridCase

# name -> which device family indexes the rows
PLAN_FIELDS = {
    "u": "prosumer", "h": "gas", "P": "gas", "Q": "gas", "r": "gas",
    "mu_c": "storage", "mu_d": "storage", "pcl": "storage", "pch": "storage",
    "pdl": "storage", "pdh": "storage", "El": "storage", "Eh": "storage",
}


@dataclass
class DayAheadPlan:
    u: np.ndarray
    h: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    r: np.ndarray
    mu_c: np.ndarray
    mu_d: np.ndarray
    pcl: np.ndarray
    pch: np.ndarray
    pdl: np.ndarray
    pdh: np.ndarray
    El: np.ndarray
    Eh: np.ndarray

    @classmethod
    def zeros(cls, case: MicrogridCase) -> "DayAheadPlan":
        T = case.horizon
        sizes = {"prosumer": case.J, "gas": len(case.gas_units), "storage": len(case.storages)}
        arrs = {nm: np.zeros((sizes[fam], T)) for nm, fam in PLAN_FIELDS.items()}
        plan = cls(**arrs)
        for e, st in enumerate(case.storages):
            plan.El[e, :] = st.e0
            plan.Eh[e, :] = st.e0
        return plan

    def copy(self) -> "DayAheadPlan":
        return DayAheadPlan(**{f.name: np.array(getattr(self, f.name), dtype=float) for f in fields(self)})

    def equals(self, other: "DayAheadPlan", tol: float = 0.0) -> bool:
        return all(np.allclose(getattr(self, f.name), getattr(other, f.name), atol=tol, rtol=0)
                   for f in fields(self))

    def check_shape(self, case: MicrogridCase) -> None:
        T = case.horizon
        sizes = {"prosumer": case.J, "gas": len(case.gas_units), "storage": len(case.storages)}
        for nm, fam in PLAN_FIELDS.items():
            arr = getattr(self, nm)
            if arr.shape != (sizes[fam], T):
                raise DimensionMismatch(f"plan field {nm} has shape {arr.shape}, expected {(sizes[fam], T)}")

    def violations(self, case: MicrogridCase, tol: float = 1e-6) -> list[str]:
        """Invariant check of the first-stage constraints; empty when consistent."""
        self.check_shape(case)
        out: list[str] = []
        T = case.horizon
        for nm in ("u", "h", "mu_c", "mu_d"):
            arr = getattr(self, nm)
            if np.any(np.minimum(np.abs(arr), np.abs(arr - 1)) > tol):
                out.append(f"{nm} must be binary")
        for g, gu in enumerate(case.gas_units):
            for t in range(T):
                h, P, r, Q = self.h[g, t], self.P[g, t], self.r[g, t], self.Q[g, t]
                tag = f"gas[{g}] t={t + 1}"
                if r < -tol:
                    out.append(f"{tag}: negative reserve")
                if P < -tol:
                    out.append(f"{tag}: negative output")
                if case.strict_reserve:
                    if P - r < h * gu.p_min - tol or P + r > h * gu.p_max + tol:
                        out.append(f"{tag}: reserve band outside unit limits")
                else:
                    if P + r < h * gu.p_min - tol or P - r > h * gu.p_max + tol:
                        out.append(f"{tag}: reserve band outside unit limits")
                if Q < h * gu.q_min - tol or Q > h * gu.q_max + tol:
                    out.append(f"{tag}: reactive output outside limits")
        for e, st in enumerate(case.storages):
            El_prev = Eh_prev = st.e0
            for t in range(T):
                tag = f"storage[{e}] t={t + 1}"
                mc, md = self.mu_c[e, t], self.mu_d[e, t]
                if mc + md > 1 + tol:
                    out.append(f"{tag}: simultaneous charge and discharge status")
                if not (mc * st.pc_min - tol <= self.pcl[e, t] <= self.pch[e, t] + tol
                        and self.pch[e, t] <= mc * st.pc_max + tol):
                    out.append(f"{tag}: charge envelope outside limits")
                if not (md * st.pd_min - tol <= self.pdl[e, t] <= self.pdh[e, t] + tol
                        and self.pdh[e, t] <= md * st.pd_max + tol):
                    out.append(f"{tag}: discharge envelope outside limits")
                el = El_prev + (self.pcl[e, t] * st.eta_c - self.pdh[e, t] / st.eta_d) * case.step
                eh = Eh_prev + (self.pch[e, t] * st.eta_c - self.pdl[e, t] / st.eta_d) * case.step
                if abs(el - self.El[e, t]) > tol or abs(eh - self.Eh[e, t]) > tol:
                    out.append(f"{tag}: SOC envelope recursion broken")
                if not (st.e_min - tol <= self.El[e, t] <= self.Eh[e, t] + tol and self.Eh[e, t] <= st.e_max + tol):
                    out.append(f"{tag}: SOC envelope outside limits")
                El_prev, Eh_prev = self.El[e, t], self.Eh[e, t]
            if T and (abs(self.El[e, T - 1] - st.e0) > st.delta_e + tol or abs(self.Eh[e, T - 1] - st.e0) > st.delta_e + tol):
                out.append(f"storage[{e}]: terminal SOC band violated")
        return out

    # IO -----------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["field", "index", "period", "value"])
        for nm in PLAN_FIELDS:
            arr = getattr(self, nm)
            for i in range(arr.shape[0]):
                for t in range(arr.shape[1]):
                    wr.writerow([nm, i, t + 1, repr(float(arr[i, t]))])
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, case: MicrogridCase) -> "DayAheadPlan":
        plan = cls.zeros(case)
        rd = csv.reader(io.StringIO(text))
        header = next(rd, None)
        if header != ["field", "index", "period", "value"]:
            raise ParseError("plan file must start with 'field,index,period,value'")
        for n, row in enumerate(rd, start=2):
            if not row:
                continue
            try:
                nm, i, t, v = row[0], int(row[1]), int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"plan line {n}: {exc}") from exc
            if nm not in PLAN_FIELDS:
                raise ParseError(f"plan line {n}: unknown field {nm!r}")
            arr = getattr(plan, nm)
            if not (0 <= i < arr.shape[0] and 1 <= t <= arr.shape[1]):
                raise DimensionMismatch(f"plan line {n}: entry ({i}, {t}) outside {arr.shape}")
            arr[i, t - 1] = v
        return plan

    @classmethod
    def load(cls, path, case: MicrogridCase) -> "DayAheadPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read(), case)
