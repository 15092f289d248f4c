from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridshare.dispatch.ccg import run_ccg, run_ccg_traditional, run_diu
from gridshare.dispatch.compact import analytic_census, assemble_compact
from gridshare.dispatch.master import solve_master
from gridshare.dispatch.oracle import MAX_BITS, brute_force_minmax, extensive_value
from gridshare.dispatch.plan import DayAheadPlan
from gridshare.dispatch.pwl import linearize_disutility
from gridshare.dispatch.subproblem import (recourse_value, solve_feasibility, solve_subproblem_ad,
                                           solve_subproblem_decomposed, solve_subproblem_mip)
from gridshare.errors import DegenerateRange, DimensionMismatch, TooLarge
from gridshare.instances import stuck_case, tiny_case
from gridshare.model import Customer, UncertaintyBudget, load_case
from gridshare.uncertainty import enumerate_vertices, membership, midpoint, vertex_to_scenario


def rel_close(a, b, tol=1e-6):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@pytest.fixture(scope="module")
def desk_run():
    return run_ccg(load_case("benchmark33"))


# piecewise-linear disutility ----------------------------------------------

@settings(max_examples=40, deadline=None)
@given(a1=st.floats(1, 50), a2=st.floats(0, 400), lo=st.floats(0, 3), width=st.floats(0.1, 5),
       M=st.integers(2, 20))
def test_pwl_over_estimates_within_bound(a1, a2, lo, width, M):
    c = Customer("consumer", 1, a1, a2, 0.0, (0.0,), (lo,), (lo + width,))
    pw = linearize_disutility(c, 0, M)
    d = np.linspace(lo, lo + width, 301)
    err = pw(d) - c.disutility(d)
    assert err.min() >= -1e-9 * max(1.0, a2 * (lo + width))
    assert err.max() <= pw.error_bound + 1e-9 * max(1.0, a2 * (lo + width))
    assert pw.error_bound == pytest.approx(a1 * (width / (M - 1)) ** 2 / 4)


def test_pwl_exact_at_breakpoints():
    c = Customer("consumer", 1, 10.0, 100.0, 0.0, (0.0,), (1.0,), (3.0,))
    pw = linearize_disutility(c, 0, 5)
    assert np.allclose(pw(pw.points), c.disutility(pw.points))


def test_pwl_degenerate_range():
    c = Customer("consumer", 1, 10.0, 100.0, 0.0, (0.0,), (2.0,), (2.0,))
    with pytest.raises(DegenerateRange) as err:
        linearize_disutility(c, 0, 5)
    assert err.value.point == 2.0
    with pytest.raises(ValueError):
        linearize_disutility(Customer("consumer", 1, 1.0, 1.0, 0.0, (0.0,), (0.0,), (1.0,)), 0, 1)


# compact form and plans -----------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_compact_census_matches_analytic(seed):
    case = tiny_case(seed)
    cm = assemble_compact(case)
    census = {k: v for k, v in cm.census().items() if v}
    expected = {k: v for k, v in analytic_census(case).items() if v}
    assert census == expected
    assert cm.T.shape == (cm.m, case.J * case.T)


def test_desk_census():
    case = load_case("benchmark33")
    assert {k: v for k, v in assemble_compact(case).census().items() if v} == \
        {k: v for k, v in analytic_census(case).items() if v}


def test_plan_csv_round_trip(desk_run):
    case = load_case("benchmark33")
    plan = desk_run.plan
    back = DayAheadPlan.from_csv(plan.to_csv(), case)
    assert back.equals(plan)
    assert back.to_csv() == plan.to_csv()


def test_plan_x_round_trip(desk_run):
    cm = desk_run.compact
    x = cm.x_from_plan(desk_run.plan)
    assert cm.plan_from_x(x).equals(desk_run.plan)


def test_plan_shape_checked(desk_run):
    with pytest.raises(DimensionMismatch):
        DayAheadPlan.zeros(tiny_case(0)).check_shape(load_case("benchmark33"))


def test_returned_plan_is_consistent(desk_run):
    assert desk_run.plan.violations(load_case("benchmark33")) == []


def test_broken_plan_reported(desk_run):
    plan = desk_run.plan.copy()
    plan.u[0, 0] = 0.5
    plan.r[0, 0] = -1.0
    v = plan.violations(load_case("benchmark33"))
    assert any("binary" in s for s in v)
    assert any("negative reserve" in s for s in v)


# subproblems ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_subproblem_modes_against_enumeration(seed):
    case = tiny_case(seed)
    res = run_ccg(case)
    cm, x, u = res.compact, res.compact.x_from_plan(res.plan), res.plan.u
    ref = max(recourse_value(cm, x, vertex_to_scenario(case, u, v))[0] for v in enumerate_vertices(case, u))
    assert rel_close(solve_subproblem_decomposed(cm, x).value, ref)
    assert rel_close(solve_subproblem_mip(cm, x).value, ref)
    ad = solve_subproblem_ad(cm, x, seed=seed)
    assert ad.value <= ref + 1e-6 * max(1.0, abs(ref))
    assert membership(case, u, ad.w)


def test_feasibility_check_flags_bad_plan():
    case = stuck_case()
    cm = assemble_compact(case)
    plan = DayAheadPlan.zeros(case)
    plan.u[:] = 1.0
    assert solve_feasibility(cm, cm.x_from_plan(plan)).value > 0.5
    plan.u[:] = 0.0
    assert solve_feasibility(cm, cm.x_from_plan(plan)).value <= 1e-9


# master -----------------------------------------------------------------------

def test_master_bound_grows_with_pool():
    case = tiny_case(3)
    cm = assemble_compact(case)
    mid = midpoint(case)
    lo, hi = case.w_bounds()
    a = solve_master(cm, [mid])
    b = solve_master(cm, [mid, hi])
    assert b.lower_bound >= a.lower_bound - 1e-9
    with pytest.raises(ValueError):
        solve_master(cm, [])
    with pytest.raises(ValueError):
        solve_master(cm, [mid], mode="nope")


# drivers ----------------------------------------------------------------------

def test_desk_projection_and_diu(desk_run):
    diu = run_diu(load_case("benchmark33"))
    assert desk_run.state.status == "optimal"
    assert rel_close(desk_run.objective, diu.objective)
    assert desk_run.state.iterations <= diu.state.iterations


def test_bounds_are_monotone(desk_run):
    lbs = desk_run.state.lower_bounds
    ubs = desk_run.state.upper_bounds
    assert all(b >= a - 1e-6 for a, b in zip(lbs, lbs[1:]))
    assert all(b <= a + 1e-6 for a, b in zip(ubs, ubs[1:]))
    assert all(lb <= ub + 1e-6 * abs(ub) for lb, ub in zip(lbs, ubs))


def test_zero_budget_single_iteration():
    case = load_case("benchmark33").replace(budgets=UncertaintyBudget(0, 0))
    res = run_ccg(case)
    assert res.state.iterations == 1
    assert res.state.status == "optimal"


def test_budget_raises_cost():
    case = tiny_case(7)
    objs = [run_ccg(case.replace(budgets=UncertaintyBudget(b, b))).objective for b in (0, 1, 2)]
    assert objs[0] <= objs[1] + 1e-6 and objs[1] <= objs[2] + 1e-6


def test_traditional_stuck_and_projection_optimal():
    case = stuck_case()
    trad = run_ccg_traditional(case)
    assert trad.state.status == "stuck"
    res = run_ccg(case)
    assert res.objective == pytest.approx(50.0)
    assert np.all(res.plan.u == 0)


@pytest.mark.parametrize("seed", range(8))
def test_ccg_matches_oracle(seed):
    case = tiny_case(100 + seed)
    ref = brute_force_minmax(case)
    res = run_ccg(case, eps=1e-7)
    assert rel_close(res.objective, ref.objective)
    assert rel_close(run_diu(case, eps=1e-7).objective, ref.objective)


def test_oracle_guard():
    case = load_case("benchmark33")
    assert case.J * case.T > MAX_BITS
    with pytest.raises(TooLarge):
        brute_force_minmax(case)


def test_extensive_value_infeasible_connection():
    case = stuck_case()
    cm = assemble_compact(case)
    lo, hi = case.w_bounds()
    val, _ = extensive_value(cm, np.ones((1, 1)), [hi])
    assert val == np.inf
    val, _ = extensive_value(cm, np.zeros((1, 1)), [np.zeros((1, 1))])
    assert val == pytest.approx(50.0)
