from __future__ import annotations

import numpy as np
import pytest

from gridshare.dispatch.ccg import run_ccg
from gridshare.dispatch.realtime import soc_path, soc_violations, simulate_realtime
from gridshare.model import UncertaintyBudget, load_case
from gridshare.uncertainty import midpoint, sample_oos


@pytest.fixture(scope="module")
def desk_plan():
    case = load_case("benchmark33")
    return case, run_ccg(case).plan


def test_soc_recursion():
    case = load_case("benchmark33")
    st = case.storages[0]
    pc = np.zeros((len(case.storages), case.T))
    pd = np.zeros_like(pc)
    pc[0, 0] = 1.0
    pd[0, 1] = 1.0
    E = soc_path(case, pc, pd)
    assert E[0, 0] == pytest.approx(st.e0 + st.eta_c * case.step)
    assert E[0, 1] == pytest.approx(E[0, 0] - case.step / st.eta_d)
    assert np.allclose(E[0, 2:], E[0, 1])


def test_envelope_corners_stay_inside(desk_plan):
    case, plan = desk_plan
    for pc, pd in ((plan.pcl, plan.pdh), (plan.pch, plan.pdl), (plan.pcl, plan.pdl), (plan.pch, plan.pdh)):
        assert soc_violations(case, plan, soc_path(case, pc, pd)) == 0


def test_out_of_envelope_counted(desk_plan):
    case, plan = desk_plan
    E = soc_path(case, plan.pch, plan.pdl) + 100.0
    assert soc_violations(case, plan, E) > 0


def test_nominal_scenario_feasible(desk_plan):
    case, plan = desk_plan
    rep = simulate_realtime(case, plan, [midpoint(case, plan.u)], keep_paths=True)
    assert rep.infeasible == 0 and rep.soc_violations == 0
    assert len(rep.soc_paths) == 1
    assert np.isfinite(rep.mean_cost)


def test_robust_plan_survives_draws(desk_plan):
    case, plan = desk_plan
    rep = simulate_realtime(case, plan, sample_oos(case, plan.u, 0.06, 15, seed=3))
    assert rep.n == 15
    assert rep.infeasible_rate == 0.0
    assert rep.soc_violations == 0
    assert set(rep.summary()) >= {"n", "infeasible", "infeasible_rate", "mean_cost"}


def test_empty_report():
    case = load_case("benchmark33")
    plan = run_ccg(case.replace(budgets=UncertaintyBudget(0, 0))).plan
    rep = simulate_realtime(case, plan, [])
    assert rep.infeasible_rate == 0.0 and np.isnan(rep.mean_cost)
