"""Decision-dependent renewable uncertainty set.

For connection bits ``u`` (prosumers x periods) the set is

    W_lo*u <= w <= W_hi*u,
    sum_k |w_kt - we_kt| / wh_kt <= B_S   for every period t,
    sum_t |w_kt - we_kt| / wh_kt <= B_T   for every prosumer k,

with midpoint ``we = 0.5*(W_lo + W_hi)*u`` and half-width
``wh = 0.5*(W_hi - W_lo)`` (independent of ``u``).  Slots with zero
half-width carry no deviation and are left out of the budget sums.
Scenarios are plain ``J x T`` arrays.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DimensionMismatch, ParseError, TooLarge
from .model import MicrogridCase, UncertaintyBudget

MAX_SLOTS = 20


@dataclass(frozen=True)
class DeviationVertex:
    zplus: np.ndarray
    zminus: np.ndarray

    def is_valid(self, u: np.ndarray, budgets: UncertaintyBudget) -> bool:
        z = self.zplus + self.zminus
        return bool(np.all(z <= u) and np.all(z.sum(axis=0) <= budgets.b_s) and np.all(z.sum(axis=1) <= budgets.b_t))


def _check_dims(case: MicrogridCase, *arrs) -> None:
    for a in arrs:
        if np.shape(a) != (case.J, case.T):
            raise DimensionMismatch(f"expected a {case.J}x{case.T} array, got shape {np.shape(a)}")


def midpoint(case: MicrogridCase, u=None) -> np.ndarray:
    lo, hi = case.w_bounds()
    mid = 0.5 * (lo + hi)
    return mid if u is None else mid * np.asarray(u, dtype=float)


def half_width(case: MicrogridCase) -> np.ndarray:
    lo, hi = case.w_bounds()
    return 0.5 * (hi - lo)


def membership(case: MicrogridCase, u, w, budgets: UncertaintyBudget | None = None, tol: float = 1e-9) -> bool:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    _check_dims(case, u, w)
    budgets = budgets or case.budgets
    lo, hi = case.w_bounds()
    if np.any(w < lo * u - tol) or np.any(w > hi * u + tol):
        return False
    we = midpoint(case, u)
    wh = half_width(case)
    dev = np.zeros_like(w)
    pos = wh > 0
    dev[pos] = np.abs(w[pos] - we[pos]) / wh[pos]
    if np.any(dev.sum(axis=0) > budgets.b_s + tol) or np.any(dev.sum(axis=1) > budgets.b_t + tol):
        return False
    return True


def vertex_to_scenario(case: MicrogridCase, u, v: DeviationVertex) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return midpoint(case, u) + half_width(case) * (v.zplus - v.zminus) * u


def active_slots(case: MicrogridCase, u) -> list[tuple[int, int]]:
    """Connected slots that can deviate (positive half-width)."""
    u = np.asarray(u)
    wh = half_width(case)
    return [(j, t) for j in range(case.J) for t in range(case.T) if u[j, t] > 0.5 and wh[j, t] > 0]


def enumerate_vertices(case: MicrogridCase, u, budgets: UncertaintyBudget | None = None) -> Iterator[DeviationVertex]:
    """Every budget-feasible sign pattern on the connected slots."""
    u = np.asarray(u, dtype=float)
    _check_dims(case, u)
    budgets = budgets or case.budgets
    slots = active_slots(case, u)
    if len(slots) > MAX_SLOTS:
        raise TooLarge(f"{len(slots)} deviation slots exceed the enumeration guard of {MAX_SLOTS}")
    J, T = case.J, case.T
    zp = np.zeros((J, T), dtype=int)
    zm = np.zeros((J, T), dtype=int)
    col = np.zeros(T, dtype=int)
    row = np.zeros(J, dtype=int)

    def rec(i: int):
        if i == len(slots):
            yield DeviationVertex(zp.copy(), zm.copy())
            return
        j, t = slots[i]
        yield from rec(i + 1)
        if col[t] < budgets.b_s and row[j] < budgets.b_t:
            col[t] += 1
            row[j] += 1
            for arr in (zp, zm):
                arr[j, t] = 1
                yield from rec(i + 1)
                arr[j, t] = 0
            col[t] -= 1
            row[j] -= 1

    yield from rec(0)


def project(u, w) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != w.shape:
        raise DimensionMismatch(f"shape mismatch {u.shape} vs {w.shape}")
    return u * w


def lift(case: MicrogridCase, u, w) -> np.ndarray:
    """Fill disconnected slots of ``w`` with the full midpoint.

    ``project(u2, lift(u, w))`` lies in ``W(u2)`` for every ``u2`` whenever
    ``w`` lies in ``W(u)``: deviations only survive on slots connected under
    ``u``, so every budget sum can only shrink.
    """
    u = np.asarray(u, dtype=float)
    return np.where(u > 0.5, w, midpoint(case))


def sample_oos(case: MicrogridCase, u, sigma_frac: float, n: int, seed: int) -> list[np.ndarray]:
    """Independent normal draws around the midpoint, truncated at zero and masked by ``u``."""
    if sigma_frac < 0:
        raise ValueError("sigma_frac must be non-negative")
    u = np.asarray(u, dtype=float)
    _check_dims(case, u)
    rng = np.random.default_rng(seed)
    mean = midpoint(case, u)
    out = []
    for _ in range(n):
        draw = rng.normal(mean, sigma_frac * mean) if sigma_frac > 0 else mean.copy()
        out.append(np.maximum(draw, 0.0) * u)
    return out


# scenario files -------------------------------------------------------------

def scenarios_to_csv(case: MicrogridCase, scenarios: list) -> str:
    """Matrix text: one block of prosumer rows per scenario, period columns."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["scenario", "prosumer"] + [str(t + 1) for t in range(case.T)])
    names = [case.customers[k].name for k in case.prosumers]
    for s, w in enumerate(scenarios):
        for j in range(case.J):
            wr.writerow([s, names[j]] + [repr(float(v)) for v in w[j]])
    return buf.getvalue()


def scenarios_from_csv(case: MicrogridCase, text: str) -> list[np.ndarray]:
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if not header:
        raise ParseError("empty scenario file")
    has_id = header[0] == "scenario"
    ncols = case.T + (2 if has_id else 1)
    if len(header) != ncols:
        raise DimensionMismatch(f"scenario file has {len(header)} columns, expected {ncols}")
    blocks: dict = {}
    for n, row in enumerate(rd, start=2):
        if not row:
            continue
        try:
            sid = int(row[0]) if has_id else 0
            vals = [float(v) for v in row[ncols - case.T:]]
        except ValueError as exc:
            raise ParseError(f"scenario line {n}: {exc}") from exc
        blocks.setdefault(sid, []).append(vals)
    out = []
    for sid in sorted(blocks):
        arr = np.array(blocks[sid], dtype=float)
        if arr.shape != (case.J, case.T):
            raise DimensionMismatch(f"scenario {sid} has shape {arr.shape}, expected {(case.J, case.T)}")
        out.append(arr)
    return out
