"""Regenerate the bundled 33-bus desk case and its reference plan.

Network topology, impedances and nominal loads follow the widely used
Baran-Wu 33-bus feeder.  Everything else (load profile, line limits,
device data, renewable intervals, penalties) is invented for this
repository.  Run from the repository root:

    python scripts/build_benchmark33.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from gridshare.dispatch.plan import DayAheadPlan
from gridshare.instances import stuck_case
from gridshare.model import (Bus, Customer, GasUnit, Line, MicrogridCase, Storage, UncertaintyBudget,
                             check_case, serialize)

OUT = Path(__file__).resolve().parents[1] / "src" / "gridshare" / "cases"

# from, to, r [ohm], x [ohm]; load at "to" bus in kW / kVAr
FEEDER = [
    (1, 2, 0.0922, 0.0470, 100, 60), (2, 3, 0.4930, 0.2511, 90, 40), (3, 4, 0.3660, 0.1864, 120, 80),
    (4, 5, 0.3811, 0.1941, 60, 30), (5, 6, 0.8190, 0.7070, 60, 20), (6, 7, 0.1872, 0.6188, 200, 100),
    (7, 8, 0.7114, 0.2351, 200, 100), (8, 9, 1.0300, 0.7400, 60, 20), (9, 10, 1.0440, 0.7400, 60, 20),
    (10, 11, 0.1966, 0.0650, 45, 30), (11, 12, 0.3744, 0.1238, 60, 35), (12, 13, 1.4680, 1.1550, 60, 35),
    (13, 14, 0.5416, 0.7129, 120, 80), (14, 15, 0.5910, 0.5260, 60, 10), (15, 16, 0.7463, 0.5450, 60, 20),
    (16, 17, 1.2890, 1.7210, 60, 20), (17, 18, 0.7320, 0.5740, 90, 40), (2, 19, 0.1640, 0.1565, 90, 40),
    (19, 20, 1.5042, 1.3554, 90, 40), (20, 21, 0.4095, 0.4784, 90, 40), (21, 22, 0.7089, 0.9373, 90, 40),
    (3, 23, 0.4512, 0.3083, 90, 50), (23, 24, 0.8980, 0.7091, 420, 200), (24, 25, 0.8960, 0.7011, 420, 200),
    (6, 26, 0.2030, 0.1034, 60, 25), (26, 27, 0.2842, 0.1447, 60, 25), (27, 28, 1.0590, 0.9337, 60, 20),
    (28, 29, 0.8042, 0.7006, 120, 70), (29, 30, 0.5075, 0.2585, 200, 600), (30, 31, 0.9744, 0.9630, 150, 70),
    (31, 32, 0.3105, 0.3619, 210, 100), (32, 33, 0.3410, 0.5302, 60, 40),
]

T = 6
LOAD_FACTOR = [1.07, 0.95, 1.00, 1.05, 1.10, 0.90]
KV = 33.0                      # impedances referred to a 33 kV, 1 MVA base
CONGESTED = {(3, 23): 1.6}     # MW limit of the lateral feeding prosumer 3
W_MID = [
    [1.2, 2.3, 2.8, 3.0, 2.5, 1.8],
    [1.2, 1.8, 2.4, 2.6, 2.0, 1.3],
    [6.403, 5.0, 6.2, 6.6, 5.2, 4.6],
]
SPREAD = 0.4                   # renewable interval is midpoint * (1 -/+ SPREAD)
NOMINAL_IMPORT = 0.518          # net customer import at the period-1 equilibrium (MW)
ALPHA_PER_MW = 400.0           # disconnection penalty per MW of midpoint output
TABLE_I = [                    # bus, a1, a2, a3, d_fixed, d_lo, d_hi
    (10, 30.0, 360.0, 1200.0, 0.10, 0.1, 3.0),
    (18, 50.0, 500.0, 2300.0, 0.20, 0.2, 4.0),
    (23, 60.0, 600.0, 3000.0, 0.15, 0.3, 5.0),
]

HEADER = """benchmark33: desk-scale standalone microgrid on the 33-bus feeder.

REPO-INVENTED DATA. Topology, line impedances and nominal bus loads follow
the Baran-Wu 33-bus feeder; impedances are converted to squared-voltage
drop coefficients as 2*R/kV^2 per MW on a 33 kV base.  The load profile,
line limits (10 MW everywhere except 1.6 MW on line 3-23), gas units,
storages, renewable intervals, disconnection penalties and budgets are
invented for this repository.  Prosumer parameters (buses 10/18/23,
disutility coefficients, fixed demands and elastic ranges) follow the
published prosumer table.  Absolute costs are not comparable to any
published figure.  Regenerate with scripts/build_benchmark33.py."""


def build_case() -> MicrogridCase:
    buses = [Bus(1, tuple([0.0] * T), tuple([0.0] * T), 0.81, 1.21)]
    lines = []
    for f, t, r, x, pk, qk in FEEDER:
        buses.append(Bus(t, tuple(round(pk / 1000 * s, 6) for s in LOAD_FACTOR),
                         tuple(round(qk / 1000 * s, 6) for s in LOAD_FACTOR), 0.81, 1.21))
        coef = 2.0 / KV ** 2
        lines.append(Line(f, t, round(r * coef, 8), round(x * coef, 8), CONGESTED.get((f, t), 10.0), 10.0))
    gas = [GasUnit(1, 80.0, 20.0, 0.0, 4.0, -2.0, 3.0, "gas1"),
           GasUnit(30, 95.0, 25.0, 0.0, 2.0, -1.0, 1.5, "gas2")]
    stor = [Storage(11, 0.95, 0.95, 0.0, 0.5, 0.0, 0.5, 0.2, 1.8, 1.0, 0.2, "ess1"),
            Storage(24, 0.95, 0.95, 0.0, 0.5, 0.0, 0.5, 0.2, 1.8, 1.0, 0.2, "ess2")]
    custs = []
    for j, (bus, a1, a2, a3, df, lo, hi) in enumerate(TABLE_I):
        mid = np.array(W_MID[j])
        custs.append(Customer("prosumer", bus, a1, a2, a3, tuple([df] * T), tuple([lo] * T), tuple([hi] * T),
                              tuple(np.round(mid * (1 - SPREAD), 6)), tuple(np.round(mid * (1 + SPREAD), 6)),
                              tuple(np.round(mid * ALPHA_PER_MW, 6)), f"prosumer{j + 1}"))
    case = MicrogridCase(tuple(buses), tuple(lines), tuple(gas), tuple(stor), tuple(custs), T, 1.0, 0.01,
                         UncertaintyBudget(2, 4), 10, 1.0, False, "benchmark33")
    return check_case(case)


def reference_plan(case: MicrogridCase) -> DayAheadPlan:
    """Hand-set plan used by the market demonstration (storage idle)."""
    plan = DayAheadPlan.zeros(case)
    plan.u[:] = 1.0
    plan.h[:] = 1.0
    p_total = np.array([sum(b.load_p[t] for b in case.buses) for t in range(case.T)])
    # the gas band contains the fixed load, so zero net sharing is always operable
    plan.P[1, :], plan.r[1, :] = 0.9, 0.2
    plan.r[0, :] = 0.6
    plan.P[0, :] = np.round(p_total - 0.9, 9)
    # period 1: gas at the top of its band leaves NOMINAL_IMPORT MW for the customers
    plan.P[0, 0] = round(p_total[0] + NOMINAL_IMPORT - 0.9 - 0.8, 9)
    q_total = np.array([sum(b.load_q[t] for b in case.buses) for t in range(case.T)])
    plan.Q[0, :] = 1.8
    plan.Q[1, :] = np.round(q_total - 1.8, 9)
    return plan


def main() -> None:
    case = build_case()
    (OUT / "benchmark33.yaml").write_text(serialize(case, HEADER))
    reference_plan(case).save(OUT / "benchmark33_plan.csv")
    stuck = "Single-bus island on which plain C&CG gets stuck; only disconnection survives w = 3 MW."
    (OUT / "stuck.yaml").write_text(serialize(stuck_case(), stuck))
    print("wrote", OUT / "benchmark33.yaml", "and", OUT / "stuck.yaml")


if __name__ == "__main__":
    main()
