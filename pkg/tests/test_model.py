from __future__ import annotations

import numpy as np
import pytest
import yaml

from gridshare.errors import ParseError, ValidationError
from gridshare.instances import stuck_case, tiny_case
from gridshare.model import (UncertaintyBudget, case_to_dict, check_case, load_case, loads_case, nodal_map,
                             scale_elastic, scale_renewable, serialize, validate_case)


@pytest.fixture(scope="module")
def desk():
    return load_case("benchmark33")


def test_bundled_cases_load(desk):
    assert desk.J == 3 and desk.T == 6
    assert len(desk.buses) == 33 and len(desk.lines) == 32
    assert desk.budgets == UncertaintyBudget(2, 4)
    assert load_case("stuck").J == 1


def test_round_trip_is_lossless(desk):
    again = loads_case(serialize(desk, "header line"))
    assert again == desk
    assert serialize(again) == serialize(desk)


@pytest.mark.parametrize("seed", range(5))
def test_tiny_round_trip(seed):
    case = tiny_case(seed)
    assert loads_case(serialize(case)) == case


def test_schema_version_checked(desk):
    doc = case_to_dict(desk)
    doc["schema_version"] = 99
    with pytest.raises(ParseError, match="schema_version"):
        loads_case(yaml.safe_dump(doc))


def test_missing_file():
    with pytest.raises(ParseError):
        load_case("/no/such/case.yaml")


def test_garbage_yaml():
    with pytest.raises(ParseError):
        loads_case("a: [1, 2")


def test_loop_rejected(desk):
    extra = desk.lines[0].__class__(5, 20, 0.1, 0.1, 1.0, 1.0)
    with pytest.raises(ValidationError):
        check_case(desk.replace(lines=desk.lines + (extra,)))


def test_bad_sensitivity_reported(desk):
    assert any("market_sensitivity" in d for d in validate_case(desk.replace(market_sensitivity=0.0)))


def test_nodal_map_covers_devices(desk):
    amap = nodal_map(desk)
    assert sorted(i for v in amap.customers.values() for i in v) == list(range(len(desk.customers)))
    assert sorted(i for v in amap.gas.values() for i in v) == list(range(len(desk.gas_units)))


def test_w_bounds_shape(desk):
    lo, hi = desk.w_bounds()
    assert lo.shape == hi.shape == (desk.J, desk.T)
    assert np.all(lo <= hi)


def test_scale_elastic(desk):
    wide = scale_elastic(desk, 1.2)
    for a, b in zip(desk.customers, wide.customers):
        assert np.allclose(b.d_lo, 0.8 * np.array(a.d_lo))
        assert np.allclose(b.d_hi, 1.2 * np.array(a.d_hi))
    assert scale_elastic(desk, 1.0) == desk


def test_scale_renewable_keeps_midpoint(desk):
    narrow = scale_renewable(desk, 0.1)
    lo0, hi0 = desk.w_bounds()
    lo1, hi1 = narrow.w_bounds()
    assert np.allclose(lo0 + hi0, lo1 + hi1)
    assert np.allclose(hi1 - lo1, 0.1 * (lo0 + hi0))
    with pytest.raises(ValueError):
        scale_renewable(desk, 1.5)


def test_stuck_case_shape():
    case = stuck_case()
    assert (case.J, case.T) == (1, 1)
    assert case.customers[0].d_hi[0] < case.customers[0].w_hi[0]
