from __future__ import annotations

import csv
import json
import subprocess
import sys
from types import SimpleNamespace

import numpy as np
import pytest

from gridshare import cli, market
from gridshare.errors import AuditFailure
from gridshare.model import load_case
from gridshare.uncertainty import scenarios_to_csv


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_market_nominal(tmp_path, capsys):
    out = tmp_path / "m"
    assert run("market", "--case", "benchmark33", "--period", 1, "--nominal", "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert np.allclose(summary["prices"], (217.0, 217.0, 161.05), atol=0.05)
    assert summary["total_payment"] >= 0
    assert summary["cost_with_sharing"] < summary["cost_without_sharing"]
    for name in ("market_trace.csv", "equilibrium.csv", "costs.csv", "market_trace.png", "costs.png",
                 "timings.json"):
        assert (out / name).exists()
    assert "217.01" in capsys.readouterr().out


def test_market_sweep_limits_agree(tmp_path):
    out = tmp_path / "s"
    assert run("market", "--sweep", "a=0.007,0.01,0.05,0.1", "--out", out) == 0
    rows = read_csv(out / "equilibrium.csv")
    assert len({r["a"] for r in rows}) == 4
    summary = json.loads((out / "summary.json").read_text())
    assert summary["limit_spread_across_a"] < 5e-3
    assert len({r["a"] for r in read_csv(out / "market_trace.csv")}) == 4


def test_market_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("market", "--out", a) == 0
    assert run("market", "--out", b) == 0
    for f in sorted(p.name for p in a.iterdir()):
        if f != "timings.json":
            assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_market_infeasible_exit_2(tmp_path, capsys):
    case = load_case("benchmark33")
    scen = tmp_path / "bad.csv"
    scen.write_text(scenarios_to_csv(case, [np.full((case.J, case.T), 40.0)]))
    assert run("market", "--scenario", scen, "--out", tmp_path / "x") == 2
    assert "Farkas" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_market_bad_sweep_and_period(tmp_path):
    assert run("market", "--sweep", "b=1", "--out", tmp_path / "x") == 3
    assert run("market", "--period", 9, "--out", tmp_path / "x") == 3


def test_dispatch_zero_budget(tmp_path):
    out = tmp_path / "d"
    assert run("dispatch", "--budgets", "0,0", "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["iterations"] == 1
    br = summary["breakdown"]
    assert br["penalty"] + br["gas"] + br["disutility"] == pytest.approx(summary["objective"])
    for name in ("plan.csv", "trace.csv", "scenarios.csv", "trace.png", "scenarios.png"):
        assert (out / name).exists()


def test_dispatch_stuck_instance(tmp_path):
    assert run("dispatch", "--case", "stuck", "--traditional", "--out", tmp_path / "t") == 1
    assert json.loads((tmp_path / "t" / "summary.json").read_text())["status"] == "stuck"
    assert run("dispatch", "--case", "stuck", "--out", tmp_path / "p") == 0
    assert json.loads((tmp_path / "p" / "summary.json").read_text())["objective"] == pytest.approx(50.0)


def test_dispatch_ad_needs_seed(tmp_path):
    assert run("dispatch", "--case", "stuck", "--subproblem", "ad", "--out", tmp_path / "x") == 3


def test_compare_tiny_batch(tmp_path):
    out = tmp_path / "c"
    assert run("compare", "--case", "stuck", "--seed", 1, "--instances", 2, "--out", out) == 0
    rows = read_csv(out / "comparison.csv")
    assert len(rows) == 3 * 4
    assert "wall_time" not in rows[0]
    assert len(read_csv(out / "timings.csv")) == 12


def test_compare_flags_disagreement(tmp_path, monkeypatch):
    real = cli.run_diu

    def skewed(case, **kw):
        res = real(case, **kw)
        return SimpleNamespace(objective=res.objective + 1.0, state=res.state)

    monkeypatch.setattr(cli, "run_diu", skewed)
    assert run("compare", "--case", "stuck", "--seed", 0, "--out", tmp_path / "c") == 1


def test_compare_needs_seed(tmp_path):
    assert run("compare", "--case", "stuck", "--out", tmp_path / "c") == 3


def test_oos_empty_grid(tmp_path):
    out = tmp_path / "o"
    assert run("oos", "--seed", 0, "--n", 0, "--out", out) == 0
    assert read_csv(out / "oos_grid.csv") == []
    assert (out / "oos_grid.csv").read_text().startswith("budgets,objective,sigma=0.04")


def test_oos_with_plan_file(tmp_path, monkeypatch):
    plan = tmp_path / "plan.csv"
    assert run("dispatch", "--out", tmp_path / "d") == 0
    plan.write_text((tmp_path / "d" / "plan.csv").read_text())
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("oos", "--seed", 2, "--n", 4, "--plan", plan, "--sigmas", "0.04,0.1", "--out", a) == 0
    monkeypatch.setenv("GRIDSHARE_THREADS", "2")
    assert run("oos", "--seed", 2, "--n", 4, "--plan", plan, "--sigmas", "0.04,0.1", "--out", b) == 0
    assert (a / "oos.csv").read_bytes() == (b / "oos.csv").read_bytes()
    grid = read_csv(a / "oos_grid.csv")
    assert [g["budgets"] for g in grid] == ["plan"]
    assert set(grid[0]) == {"budgets", "objective", "sigma=0.04", "sigma=0.1"}


def test_oos_config_errors(tmp_path, monkeypatch):
    assert run("oos", "--n", 0, "--out", tmp_path / "o") == 3
    assert run("oos", "--seed", 0, "--n", -1, "--out", tmp_path / "o") == 3
    monkeypatch.setenv("GRIDSHARE_THREADS", "many")
    assert run("oos", "--seed", 0, "--n", 1, "--plan", "missing.csv", "--out", tmp_path / "o") == 3


def test_verify_only(capsys):
    assert run("verify", "--only", "prop2") == 0
    out = capsys.readouterr().out
    assert "market_equals_central" in out and "payment" not in out


def test_verify_canary(monkeypatch, capsys):
    real = market.audit_payment

    def flipped(outcome, tol=1e-8):
        total = -real(outcome, tol) - 1.0
        if total < 0:
            raise AuditFailure(f"total net payment {total:.6g} is negative")
        return total

    monkeypatch.setattr(market, "audit_payment", flipped)
    assert run("verify", "--only", "prop3") == 1
    assert "payment_nonnegative" in capsys.readouterr().err


def test_verify_unknown_property():
    assert run("verify", "--only", "bogus") == 3


def test_argument_errors_exit_3():
    with pytest.raises(SystemExit) as err:
        run("dispatch", "--budgets", "x")
    assert err.value.code == 3
    with pytest.raises(SystemExit) as err:
        run("nosuch")
    assert err.value.code == 3
    assert run("market", "--case", "/no/such.yaml") == 3


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gridshare.cli", "verify", "--only", "pwl_overestimate"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS pwl_overestimate" in proc.stdout
