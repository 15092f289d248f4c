"""Small generated cases for oracles, property suites and regression exhibits."""

from __future__ import annotations

import numpy as np

from .model import Bus, Customer, GasUnit, Line, MicrogridCase, Storage, UncertaintyBudget, check_case


def _per(v, T: int) -> tuple:
    return tuple(float(x) for x in np.broadcast_to(v, (T,)))


def tiny_case(seed: int) -> MicrogridCase:
    """Random feeder with 1-2 prosumers over 1-2 periods (at most 4 connection bits).

    Prosumers sit behind a line whose limit is drawn small enough that a
    high renewable output can make staying connected infeasible.
    """
    rng = np.random.default_rng(seed)
    J = int(rng.integers(1, 3))
    T = int(rng.integers(1, 3))
    buses = [Bus(1, _per(0.0, T), _per(0.0, T))]
    lines = []
    for b in range(2, J + 2):
        buses.append(Bus(b, _per(np.round(rng.uniform(0.0, 0.4, T), 3), T), _per(0.05, T)))
        lines.append(Line(b - 1, b, 0.01, 0.01, round(float(rng.uniform(0.8, 3.0)), 3), 10.0))
    gas = (GasUnit(1, round(float(rng.uniform(20, 60)), 2), round(float(rng.uniform(2, 10)), 2), 0.0,
                   round(float(rng.uniform(4, 8)), 2), -5.0, 5.0, "g1"),)
    stor = ()
    if rng.random() < 0.5:
        stor = (Storage(2, 0.95, 0.95, 0.0, 0.5, 0.0, 0.5, 0.1, 1.0, 0.5, 0.2, "s1"),)
    custs = []
    for j in range(J):
        lo = np.round(rng.uniform(0.0, 0.5, T), 3)
        hi = np.round(lo + rng.uniform(0.5, 2.0, T), 3)
        mid = np.round(rng.uniform(0.5, 3.0, T), 3)
        spread = float(rng.uniform(0.1, 0.5))
        custs.append(Customer("prosumer", j + 2, round(float(rng.uniform(10, 40)), 2),
                              round(float(rng.uniform(100, 300)), 2), 0.0, _per(np.round(rng.uniform(0, 0.3, T), 3), T),
                              _per(lo, T), _per(hi, T), _per(mid * (1 - spread), T), _per(mid * (1 + spread), T),
                              _per(np.round(rng.uniform(20, 200) * mid, 2), T), f"p{j + 1}"))
    if rng.random() < 0.5:
        custs.append(Customer("consumer", 2, 20.0, 200.0, 0.0, _per(0.1, T), _per(0.2, T), _per(1.0, T), name="c1"))
    if rng.random() < 0.7:
        budgets = UncertaintyBudget(1, 1)
    else:
        budgets = UncertaintyBudget(int(rng.integers(0, 2)), int(rng.integers(0, 2)))
    case = MicrogridCase(tuple(buses), tuple(lines), gas, stor, tuple(custs), T, 1.0, 0.01, budgets,
                         pwl_points=4, strict_reserve=bool(rng.random() < 0.5), name=f"tiny{seed}")
    return check_case(case)


def stuck_case() -> MicrogridCase:
    """Single-bus island where only disconnection survives the high renewable output.

    One prosumer, one period, no other devices: real-time balance forces
    d = w, and d <= 2 while w can reach 3.  Plain C&CG pools w = 3 as is,
    which no master decision can absorb.
    """
    T = 1
    bus = Bus(1, _per(0.0, T), _per(0.0, T))
    cust = Customer("prosumer", 1, 10.0, 40.0, 0.0, _per(0.0, T), _per(0.0, T), _per(2.0, T),
                    _per(1.0, T), _per(3.0, T), _per(50.0, T), "p1")
    case = MicrogridCase((bus,), (), (), (), (cust,), T, 1.0, 0.01, UncertaintyBudget(1, 1), pwl_points=4,
                         name="stuck")
    return check_case(case)
