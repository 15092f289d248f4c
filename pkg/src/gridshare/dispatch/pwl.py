"""Chord-based piecewise-linear epigraph of the quadratic disutility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateRange
from ..model import Customer


@dataclass(frozen=True)
class PwlDisutility:
    points: np.ndarray
    kappa: np.ndarray
    nu: np.ndarray
    a1: float

    def __call__(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return np.max(np.multiply.outer(d, self.kappa) + self.nu, axis=-1)

    @property
    def step(self) -> float:
        return float(self.points[1] - self.points[0])

    @property
    def error_bound(self) -> float:
        """Largest gap between the chords and the quadratic on the range."""
        return self.a1 * self.step ** 2 / 4.0


def linearize_disutility(cust: Customer, t: int, M: int) -> PwlDisutility:
    """Chords through ``M`` equally spaced samples of ``[d_lo, d_hi]``.

    Chords of a convex function lie above it inside their own interval and
    below it outside, so the maximum of all chords equals the interpolant:
    ``U <= max_m(kappa_m d + nu_m) <= U + a1*h^2/4``.
    """
    if M < 2:
        raise ValueError("at least two sample points are needed")
    lo, hi = cust.d_lo[t], cust.d_hi[t]
    if hi <= lo:
        raise DegenerateRange(f"demand range of {cust.name or 'customer'} collapses at t={t + 1}",
                              value=float(cust.disutility(lo)), point=float(lo))
    pts = np.linspace(lo, hi, M)
    vals = cust.disutility(pts)
    kappa = np.diff(vals) / np.diff(pts)
    nu = vals[:-1] - kappa * pts[:-1]
    return PwlDisutility(pts, kappa, nu, cust.a1)
