from __future__ import annotations

import numpy as np
import pytest

from gridshare.dispatch.plan import DayAheadPlan
from gridshare.errors import DimensionMismatch
from gridshare.instances import tiny_case
from gridshare.market import solve_centralized
from gridshare.network import ReducedNetwork, Tree, build_recourse, check_membership
from gridshare.verify import desk_case_and_plan


@pytest.fixture(scope="module")
def desk():
    return desk_case_and_plan()


def test_tree_is_spanning(desk):
    case, _ = desk
    tree = Tree.build(case)
    assert tree.root == case.bus_index()[1]
    assert sorted(tree.order) == list(range(len(case.buses)))
    assert sum(p < 0 for p in tree.parent) == 1
    S = tree.subtree_matrix()
    # the line into a bus carries that bus and all of its descendants
    assert S.sum() == sum(len(path) for path in [_path(tree, b) for b in range(len(case.buses))])


def _path(tree, b):
    out = []
    while tree.parent[b] >= 0:
        out.append(tree.parent_line[b])
        b = tree.parent[b]
    return out


def test_recourse_census_positive(desk):
    case, plan = desk
    census = build_recourse(case, plan, 0).census()
    assert all(v >= 0 for v in census.values())
    assert sum(census.values()) > 0


def test_membership_of_central_solution(desk):
    case, plan = desk
    w = 0.5 * sum(case.w_bounds())[:, 0]
    cs = solve_centralized(case, plan, 0, w)
    mem = check_membership(case, plan, 0, cs.q)
    assert mem.member
    assert mem.point is not None


def test_non_member_has_certificate(desk):
    case, plan = desk
    q = np.full(len(case.customers), 50.0)
    mem = check_membership(case, plan, 0, q)
    assert not mem.member
    assert mem.certificate is not None
    assert mem.margin > 0


def test_membership_dimension_check(desk):
    case, plan = desk
    with pytest.raises(DimensionMismatch):
        check_membership(case, plan, 0, [0.0])


def test_reduced_network_flows_consistent(desk):
    case, plan = desk
    net = ReducedNetwork(case, plan, 0)
    w = 0.5 * sum(case.w_bounds())[:, 0]
    cs = solve_centralized(case, plan, 0, w, net=net)
    z = np.concatenate([cs.recourse[k] for k in ("delta", "pc", "pd", "q")])
    act = net.A @ z
    from gridshare.solver.program import EQ, GE, LE
    assert np.all(act[net.senses == LE] <= net.b[net.senses == LE] + 1e-6)
    assert np.all(act[net.senses == GE] >= net.b[net.senses == GE] - 1e-6)
    assert np.allclose(act[net.senses == EQ], net.b[net.senses == EQ], atol=1e-6)
    out = net.expand(z)
    assert abs(out["P_bus"].sum()) < 1e-6
    assert np.all(np.abs(out["P_line"]) <= np.array([ln.p_max for ln in case.lines]) + 1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_reduced_matches_full_block_membership(seed):
    case = tiny_case(seed)
    plan = DayAheadPlan.zeros(case)
    rng = np.random.default_rng(seed)
    net = ReducedNetwork(case, plan, 0)
    for _ in range(5):
        q = rng.uniform(-1, 1, len(case.customers))
        full = check_membership(case, plan, 0, q).member
        # the reduced region with storage idle and no reserve
        z = np.concatenate([np.zeros(net.G + 2 * net.E), q])
        act = net.A @ z
        from gridshare.solver.program import EQ, GE, LE
        ok = (np.all(act[net.senses == LE] <= net.b[net.senses == LE] + 1e-9)
              and np.all(act[net.senses == GE] >= net.b[net.senses == GE] - 1e-9)
              and np.allclose(act[net.senses == EQ], net.b[net.senses == EQ], atol=1e-9)
              and net.reactive_ok)
        assert ok == full
