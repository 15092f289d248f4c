from __future__ import annotations

import numpy as np
import pytest

from gridshare.errors import NotConvex
from gridshare.solver import (SolverConfig, Status, farkas_margin, from_arrays, kkt_residual,
                              lagrangian_bound, solve, solve_lp, solve_milp, solve_qp)
from gridshare.solver.mps import read_mps, to_mps

from oracles import lp_vertex_enumeration, milp_enumeration, qp_active_set_enumeration


def random_lp(rng, n, m, bounded=True):
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) * 2
    c = rng.normal(size=n)
    senses = list(rng.choice(["<=", ">=", "=="], size=m, p=[0.5, 0.4, 0.1]))
    if bounded:
        lb = -rng.uniform(0, 2, n)
        ub = rng.uniform(0.5, 3, n)
    else:
        lb = np.where(rng.random(n) < 0.2, -np.inf, -rng.uniform(0, 2, n))
        ub = np.where(rng.random(n) < 0.3, np.inf, rng.uniform(0.5, 3, n))
    return from_arrays(c, A, senses, b, lb, ub)


def test_sign_fixture_le_dual():
    p = from_arrays([-1.0], [[1.0]], "<=", [3.0])
    s = solve_lp(p)
    assert s.status == Status.OPTIMAL
    assert s.objective == pytest.approx(-3.0)
    assert s.duals[0] == pytest.approx(-1.0)


def test_sign_fixture_ge_dual():
    p = from_arrays([2.0], [[1.0]], ">=", [1.5])
    s = solve_lp(p)
    assert s.duals[0] == pytest.approx(2.0)


def test_contradictory_rows_infeasible_with_certificate():
    p = from_arrays([0.0], [[1.0], [1.0]], [">=", "<="], [1.0, 0.0], lb=-np.inf)
    s = solve_lp(p)
    assert s.status == Status.INFEASIBLE
    assert farkas_margin(p, s.farkas) > 0


def test_unbounded_reports_ray():
    p = from_arrays([-1.0, 0.0], [[1.0, -1.0]], "<=", [1.0])
    s = solve_lp(p)
    assert s.status == Status.UNBOUNDED
    assert s.ray[0] > 0


def test_iteration_limit_reported():
    rng = np.random.default_rng(3)
    p = random_lp(rng, 10, 8)
    s = solve_lp(p, SolverConfig(max_pivots=1))
    assert s.status in (Status.ITER_LIMIT, Status.OPTIMAL, Status.INFEASIBLE)
    if s.status != Status.OPTIMAL:
        assert s.x is None


@pytest.mark.parametrize("seed", range(40))
def test_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    p = random_lp(rng, int(rng.integers(1, 4)), int(rng.integers(1, 6)))
    s = solve_lp(p)
    ref = lp_vertex_enumeration(p)
    if ref is None:
        assert s.status == Status.INFEASIBLE
        assert farkas_margin(p, s.farkas) > 0
    else:
        assert s.status == Status.OPTIMAL
        assert s.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)


def test_lp_strong_duality_random():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(100):
        p = random_lp(rng, int(rng.integers(2, 30)), int(rng.integers(1, 30)), bounded=False)
        s = solve_lp(p)
        if s.status != Status.OPTIMAL:
            continue
        checked += 1
        assert p.primal_residual(s.x) <= 1e-7
        assert abs(lagrangian_bound(p, s.duals) - s.objective) <= 1e-8 * (1 + abs(s.objective))
    assert checked > 20


def test_native_and_highs_agree():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = random_lp(rng, 8, 6, bounded=False)
        a = solve_lp(p)
        b = solve_lp(p, SolverConfig(backend="highs"))
        assert a.status == b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-7)


def test_lp_determinism():
    rng = np.random.default_rng(9)
    p = random_lp(rng, 12, 10)
    a, b = solve_lp(p), solve_lp(p)
    assert a.status == b.status
    if a.optimal:
        assert np.array_equal(a.x, b.x) and np.array_equal(a.duals, b.duals)


def test_knapsack():
    p = from_arrays([-5.0, -4.0], [[3.0, 2.0]], "<=", [4.0], ub=1, integer=[True, True])
    s = solve_milp(p)
    assert s.objective == pytest.approx(-5.0)
    assert np.allclose(s.x, [1.0, 0.0])


def test_totally_unimodular_root_node():
    # assignment constraints: LP relaxation is integral
    A = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    p = from_arrays([3.0, 1.0, 2.0, 4.0], A, "==", [1, 1, 1, 1], ub=1, integer=[True] * 4)
    s = solve_milp(p)
    assert s.status == Status.OPTIMAL
    assert s.stats["nodes"] == 1
    assert s.objective == pytest.approx(3.0)


@pytest.mark.parametrize("seed", range(20))
def test_milp_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    nb = int(rng.integers(1, 7))
    nc = int(rng.integers(0, 3))
    n = nb + nc
    m = int(rng.integers(1, 5))
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) + 1
    c = rng.normal(size=n)
    integer = [True] * nb + [False] * nc
    p = from_arrays(c, A, "<=", b, lb=0, ub=np.r_[np.ones(nb), np.full(nc, 2.0)], integer=integer)
    s = solve_milp(p)
    ref = milp_enumeration(p, solve_lp)
    if ref is None:
        assert s.status == Status.INFEASIBLE
    else:
        assert s.objective == pytest.approx(ref, rel=1e-8, abs=1e-8)
        assert np.all(np.abs(s.x[:nb] - np.round(s.x[:nb])) <= 1e-6)


def test_qp_clipped_minimizer_fixture():
    p = from_arrays([0.0], None, lb=1, ub=2, qdiag=[1.0])
    s = solve_qp(p)
    assert s.x[0] == pytest.approx(1.0)
    # stationarity 2d - mu = 0 at the active lower bound
    assert s.reduced_costs[0] == pytest.approx(2.0)


def test_qp_unconstrained_projection():
    b = 5.0
    p = from_arrays([-2 * b], None, lb=-np.inf, ub=np.inf, qdiag=[1.0], obj_const=b * b)
    s = solve_qp(p)
    assert s.x[0] == pytest.approx(5.0)
    assert s.objective == pytest.approx(0.0, abs=1e-12)


def test_qp_rejects_nonconvex():
    p = from_arrays([0.0], None, lb=0, ub=1, qdiag=[-1.0])
    with pytest.raises(NotConvex):
        solve(p)


@pytest.mark.parametrize("seed", range(25))
def test_qp_matches_active_set_enumeration(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    target = rng.normal(size=n) * 2
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) + 0.5
    p = from_arrays(-2 * target, A, "<=", b, lb=-2, ub=2, qdiag=np.ones(n), obj_const=float(target @ target))
    s = solve_qp(p)
    ref = qp_active_set_enumeration(p)
    if ref is None:
        assert s.status == Status.INFEASIBLE
        return
    assert s.status == Status.OPTIMAL
    assert s.objective == pytest.approx(ref, abs=1e-6)
    assert kkt_residual(p, s) <= 1e-7


def test_qp_with_linear_variables():
    # min x^2 + y  s.t.  x + y >= 1, y >= -3  -> y pushed down, x = 4? check with KKT
    p = from_arrays([0.0, 1.0], [[1.0, 1.0]], ">=", [1.0], lb=[-np.inf, -3.0], ub=np.inf, qdiag=[1.0, 0.0])
    s = solve_qp(p)
    assert s.status == Status.OPTIMAL
    assert s.x[0] == pytest.approx(0.5)
    assert s.x[1] == pytest.approx(0.5)
    assert kkt_residual(p, s) <= 1e-9


def test_mps_round_trip():
    rng = np.random.default_rng(1)
    p = from_arrays(rng.normal(size=3), rng.normal(size=(2, 3)), ["<=", ">="], [1.0, -2.0],
                    lb=[-1, -np.inf, 0], ub=[1, np.inf, 4], integer=[False, True, False], qdiag=[0.5, 0, 0])
    text = to_mps(p)
    q = read_mps(text)
    assert np.allclose(q.c, p.c, rtol=1e-9)
    assert np.allclose(q.A.toarray(), p.A.toarray(), rtol=1e-9)
    assert np.array_equal(q.senses, p.senses)
    assert np.array_equal(q.integer, p.integer)
    assert np.allclose(q.qdiag, p.qdiag)
    for line in text.splitlines():
        assert len(line) <= 61
