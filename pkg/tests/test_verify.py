from __future__ import annotations

import pytest

from gridshare import market, verify
from gridshare.errors import AuditFailure


def test_select_by_name_and_group():
    assert [p.name for p in verify.select("prop2")] == ["market_equals_central"]
    assert [p.name for p in verify.select("payment_nonnegative")] == ["payment_nonnegative"]
    assert {p.group for p in verify.select("kernel")} == {"kernel"}
    assert len(verify.select(None)) == len(verify.PROPERTIES)
    with pytest.raises(ValueError):
        verify.select("nothing_like_this")


def test_kernel_group_passes():
    outs = verify.run_suite("kernel")
    assert outs and all(o.passed for o in outs)


def test_payment_canary(monkeypatch):
    real = market.audit_payment

    def flipped(outcome, tol=1e-8):
        total = -real(outcome, tol) - 1.0
        if total < 0:
            raise AuditFailure(f"total net payment {total:.6g} is negative")
        return total

    monkeypatch.setattr(market, "audit_payment", flipped)
    outs = verify.run_suite("prop3")
    assert [o.name for o in outs] == ["payment_nonnegative"]
    assert not outs[0].passed


def test_stop_first(monkeypatch):
    def boom(seed):
        raise verify.PropertyFailure("forced")

    monkeypatch.setattr(verify, "PROPERTIES", [verify.Property("a", "g", boom), verify.Property("b", "g", boom)])
    outs = verify.run_suite(stop_first=True)
    assert len(outs) == 1 and not outs[0].passed and outs[0].detail == "forced"
