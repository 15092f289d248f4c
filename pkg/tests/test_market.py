from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridshare import market
from gridshare.errors import AuditFailure, DimensionMismatch, MarketInfeasible
from gridshare.uncertainty import midpoint
from gridshare.verify import desk_case_and_plan, feasible_market_scenarios


@pytest.fixture(scope="module")
def desk():
    return desk_case_and_plan()


@pytest.fixture(scope="module")
def nominal(desk):
    case, plan = desk
    w = midpoint(case, plan.u)[:, 0]
    return market.run_market(case, plan, 0, w), market.solve_centralized(case, plan, 0, w)


def test_nominal_prices(nominal):
    mo, cs = nominal
    assert np.allclose(mo.state.lam, (217.0, 217.0, 161.05), atol=0.05)
    assert np.allclose(mo.state.d, (2.383, 2.830, 3.658), atol=2e-3)
    assert np.max(np.abs(mo.state.lam - cs.eta)) < 1e-3


def test_trace_starts_at_zero_prices(nominal):
    mo, _ = nominal
    assert np.all(mo.trace[0]["lam"] == 0.0)
    assert mo.trace[-1]["iteration"] == len(mo.trace)


def test_best_response_clips_to_range(desk):
    case, _ = desk
    c = case.customers[0]
    d, q, b = market.best_response(c, 0, -1e6, 1.0, 0.01)
    assert d == c.d_hi[0]
    d, q, b = market.best_response(c, 0, 1e6, 1.0, 0.01)
    assert d == c.d_lo[0]
    assert q == pytest.approx(d + c.d_fixed[0] - 1.0)
    assert b == pytest.approx(q + 0.01 * 1e6)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(-500, 800), w=st.floats(0, 10))
def test_best_response_is_optimal(desk, lam, w):
    case, _ = desk
    c = case.customers[1]
    d, q, _ = market.best_response(c, 0, lam, w, 0.01)
    grid = np.linspace(c.d_lo[0], c.d_hi[0], 201)
    cost = c.disutility(grid) + lam * (grid + c.d_fixed[0] - w)
    assert c.disutility(d) + lam * q <= cost.min() + 1e-9


def test_sensitivity_does_not_move_limits(desk):
    case, plan = desk
    w = midpoint(case, plan.u)[:, 0]
    outs = [market.run_market(case, plan, 0, w, a=a) for a in (0.01, 0.05)]
    assert np.allclose(outs[0].state.lam, outs[1].state.lam, atol=5e-3)
    assert np.allclose(outs[0].state.d, outs[1].state.d, atol=1e-4)


def test_price_update_projects(desk, nominal):
    case, plan = desk
    mo, _ = nominal
    lam, q = market.price_update(case, plan, 0, mo.state.b)
    assert np.allclose(lam, mo.state.lam, atol=1e-3)
    with pytest.raises(DimensionMismatch):
        market.price_update(case, plan, 0, [1.0])


def test_infeasible_scenario_raises_with_certificate(desk):
    case, plan = desk
    with pytest.raises(MarketInfeasible) as err:
        market.solve_centralized(case, plan, 0, np.full(case.J, 40.0))
    assert err.value.certificate is not None


def test_payment_nonnegative_on_draws(desk):
    case, plan = desk
    for _, _, cs in feasible_market_scenarios(case, plan, 10, seed=11):
        assert market.audit_payment(cs) >= -1e-8


def test_audit_flags_negative_payment(nominal):
    _, cs = nominal
    flipped = market.CentralSolution(cs.d, -np.abs(cs.q) - 1.0, cs.eta, np.abs(cs.lam) + 1.0, cs.b, cs.objective,
                                     cs.recourse)
    with pytest.raises(AuditFailure):
        market.audit_payment(flipped)


def test_sharing_lowers_total_cost(desk, nominal):
    case, _ = desk
    mo, _ = nominal
    w = midpoint(case)[:, 0]
    shared = market.customer_costs(case, 0, mo.state.d, mo.state.q, mo.state.lam).sum()
    alone = market.autarky(case, 0, w, mo.state.lam)["cost"].sum()
    assert shared < alone


def test_eps_must_be_positive(desk):
    case, plan = desk
    with pytest.raises(ValueError):
        market.run_market(case, plan, 0, np.ones(case.J), eps=0.0)
