from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridshare.errors import DimensionMismatch, TooLarge
from gridshare.instances import tiny_case
from gridshare.model import UncertaintyBudget, load_case
from gridshare.uncertainty import (enumerate_vertices, half_width, lift, membership, midpoint, project, sample_oos,
                                   scenarios_from_csv, scenarios_to_csv, vertex_to_scenario)


@pytest.fixture(scope="module")
def desk():
    return load_case("benchmark33")


def _count(J, T, bs, bt, slots):
    n = 0
    for signs in itertools.product((-1, 0, 1), repeat=len(slots)):
        col = np.zeros(T)
        row = np.zeros(J)
        for (j, t), s in zip(slots, signs):
            col[t] += abs(s)
            row[j] += abs(s)
        n += bool(np.all(col <= bs) and np.all(row <= bt))
    return n


@pytest.mark.parametrize("seed", range(6))
def test_vertex_count_matches_brute_force(seed):
    case = tiny_case(seed)
    u = np.ones((case.J, case.T))
    slots = [(j, t) for j in range(case.J) for t in range(case.T) if half_width(case)[j, t] > 0]
    got = sum(1 for _ in enumerate_vertices(case, u))
    assert got == _count(case.J, case.T, case.budgets.b_s, case.budgets.b_t, slots)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), bits=st.integers(0, 15))
def test_vertices_are_members(seed, bits):
    case = tiny_case(seed)
    u = np.array([(bits >> k) & 1 for k in range(case.J * case.T)], dtype=float).reshape(case.J, case.T)
    for v in enumerate_vertices(case, u):
        w = vertex_to_scenario(case, u, v)
        assert membership(case, u, w)
        assert np.all(w[u == 0] == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), b1=st.integers(0, 15), b2=st.integers(0, 15))
def test_lift_then_project_stays_inside(seed, b1, b2):
    case = tiny_case(seed)
    shape = (case.J, case.T)
    u1 = np.array([(b1 >> k) & 1 for k in range(case.J * case.T)], dtype=float).reshape(shape)
    u2 = np.array([(b2 >> k) & 1 for k in range(case.J * case.T)], dtype=float).reshape(shape)
    for v in enumerate_vertices(case, u1):
        w = vertex_to_scenario(case, u1, v)
        assert membership(case, u2, project(u2, lift(case, u1, w)))


def test_budget_violation_detected(desk):
    u = np.ones((desk.J, desk.T))
    lo, hi = desk.w_bounds()
    assert membership(desk, u, midpoint(desk))
    assert not membership(desk, u, hi)
    assert membership(desk, u, hi, UncertaintyBudget(desk.J, desk.T))
    assert not membership(desk, u, hi + 1.0, UncertaintyBudget(desk.J, desk.T))


def test_dimension_checks(desk):
    with pytest.raises(DimensionMismatch):
        membership(desk, np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(DimensionMismatch):
        project(np.ones((2, 2)), np.ones((3, 2)))


def test_enumeration_guard(desk, monkeypatch):
    monkeypatch.setattr("gridshare.uncertainty.MAX_SLOTS", desk.J * desk.T - 1)
    with pytest.raises(TooLarge):
        next(enumerate_vertices(desk, np.ones((desk.J, desk.T))))


def test_oos_sampling(desk):
    u = np.ones((desk.J, desk.T))
    u[2, 0] = 0
    a = sample_oos(desk, u, 0.1, 20, seed=5)
    b = sample_oos(desk, u, 0.1, 20, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(np.all(x >= 0) and x[2, 0] == 0 for x in a)
    assert np.allclose(sample_oos(desk, u, 0.0, 1, seed=0)[0], midpoint(desk, u))


def test_scenario_csv_round_trip(desk):
    scen = sample_oos(desk, np.ones((desk.J, desk.T)), 0.05, 3, seed=1)
    back = scenarios_from_csv(desk, scenarios_to_csv(desk, scen))
    assert all(np.allclose(x, y) for x, y in zip(scen, back))
