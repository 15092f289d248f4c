"""Command-line front end: ``gridshare {market|dispatch|compare|oos|verify}``.

Every run writes one output directory holding ``summary.json``, plot-ready
CSV files and PNG figures.  Wall-clock times go to ``timings.json`` only, so
all other files are byte-identical across re-runs with the same inputs.

Exit codes: 0 success, 1 verification or correctness failure, 2 model
infeasibility, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import market, plotting
from .dispatch.ccg import SUBPROBLEM_MODES, run_ccg, run_ccg_traditional, run_diu
from .dispatch.plan import DayAheadPlan
from .dispatch.realtime import simulate_realtime
from .errors import (AuditFailure, DimensionMismatch, MarketInfeasible, MasterInfeasible, NonConvergence,
                     ParseError, ValidationError)
from .instances import tiny_case
from .model import MicrogridCase, UncertaintyBudget, check_case, load_case, resolve_case_path
from .uncertainty import midpoint, sample_oos, scenarios_from_csv

log = logging.getLogger("gridshare")

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3
SIGMAS = (0.04, 0.06, 0.08, 0.10)


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    case: str
    seed: int | None
    eps: float | None
    budgets: list = field(default_factory=list)
    subproblem: str = "decomposed"
    traditional: bool = False
    out: Path | None = None
    period: int = 1
    nominal: bool = False
    scenario: str | None = None
    plan: str | None = None
    sweep: str | None = None
    instances: int = 0
    n: int = 500
    sigmas: tuple = SIGMAS
    only: str | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        kw = {k: v for k, v in vars(ns).items() if k in cls.__dataclass_fields__}
        kw["out"] = Path(ns.out) if ns.out else Path("runs") / ns.command
        return cls(**kw)

    def need_seed(self, why: str) -> int:
        if self.seed is None:
            raise ConfigError(f"--seed is required {why}")
        return self.seed


def parse_budgets(text: str) -> UncertaintyBudget:
    try:
        bs, bt = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"budgets must look like BS,BT (got {text!r})") from None
    return UncertaintyBudget(bs, bt)


def parse_sigmas(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sigmas must be comma-separated numbers (got {text!r})") from None
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("sigmas must be non-negative")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", default="benchmark33", help="case file or bundled case name")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--eps", type=float, default=None, help="convergence tolerance")
    common.add_argument("--budgets", type=parse_budgets, action="append", default=[], metavar="BS,BT")
    common.add_argument("--subproblem", choices=SUBPROBLEM_MODES, default="decomposed")
    common.add_argument("--traditional", action="store_true", help="plain C&CG without projection")
    common.add_argument("--out", default=None, help="output directory (default runs/<command>)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gridshare", description="Robust microgrid dispatch with real-time energy sharing.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    m = sub.add_parser("market", parents=[common], help="run the real-time sharing market for one period")
    m.add_argument("--period", type=int, default=1, help="period number, 1-based")
    m.add_argument("--nominal", action="store_true", help="use the midpoint renewable scenario (default)")
    m.add_argument("--scenario", default=None, help="scenario matrix file; the first scenario is used")
    m.add_argument("--plan", default=None, help="day-ahead plan file (default: the case's reference plan)")
    m.add_argument("--sweep", default=None, metavar="a=V1,V2,...", help="market sensitivities to compare")
    sub.add_parser("dispatch", parents=[common], help="solve the two-stage robust dispatch")
    c = sub.add_parser("compare", parents=[common], help="paired runs: subproblem modes and DIU")
    c.add_argument("--instances", type=int, default=0, help="also compare on N random tiny instances")
    o = sub.add_parser("oos", parents=[common], help="out-of-sample feasibility of day-ahead plans")
    o.add_argument("--plan", default=None, help="evaluate this plan instead of dispatching per budget")
    o.add_argument("--n", type=int, default=500, help="scenarios per sigma")
    o.add_argument("--sigmas", type=parse_sigmas, default=SIGMAS)
    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--only", default=None, help="comma-separated property names or groups")
    return p


# output helpers ------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class RunDir:
    """Files are staged in a sibling temporary directory and moved into place at the end."""

    def __init__(self, target: Path):
        self.target = Path(target)
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))

    def path(self, name: str) -> Path:
        return self.tmp / name

    def json(self, name: str, obj) -> None:
        self.path(name).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header: list, rows) -> None:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
        self.path(name).write_text(buf.getvalue())

    def commit(self) -> Path:
        if self.target.exists():
            shutil.rmtree(self.target)
        os.replace(self.tmp, self.target)
        return self.target

    def discard(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def threads() -> int:
    raw = os.environ.get("GRIDSHARE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GRIDSHARE_THREADS must be a positive integer (got {raw!r})") from None
    if n < 1:
        raise ConfigError("GRIDSHARE_THREADS must be a positive integer")
    return n


def fan_out(fn, jobs: list) -> list:
    """Map ``fn`` over ``jobs``; results come back in job order whatever the worker count."""
    n = min(threads(), len(jobs))
    if n <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, jobs))


def _load(cfg: RunConfig) -> MicrogridCase:
    case = load_case(cfg.case)
    if cfg.budgets:
        case = check_case(case.replace(budgets=cfg.budgets[-1]))
    return case


def _reference_plan(cfg: RunConfig, case: MicrogridCase) -> DayAheadPlan:
    if cfg.plan:
        return DayAheadPlan.load(cfg.plan, case)
    ref = resolve_case_path(cfg.case)
    cand = ref.with_name(ref.stem + "_plan.csv")
    if not cand.exists():
        raise ConfigError(f"no --plan given and no reference plan {cand.name} next to the case file")
    return DayAheadPlan.load(cand, case)


# market ----------------------------------------------------------------------

def _sweep_values(cfg: RunConfig, case: MicrogridCase) -> list:
    if not cfg.sweep:
        return [case.market_sensitivity]
    key, _, vals = cfg.sweep.partition("=")
    if key.strip() != "a" or not vals:
        raise ConfigError(f"--sweep supports only a=V1,V2,... (got {cfg.sweep!r})")
    try:
        out = [float(v) for v in vals.split(",")]
    except ValueError:
        raise ConfigError(f"bad --sweep values {vals!r}") from None
    if any(v <= 0 for v in out):
        raise ConfigError("market sensitivities must be positive")
    return out


def cmd_market(cfg: RunConfig) -> int:
    case = _load(cfg)
    plan = _reference_plan(cfg, case)
    if not 1 <= cfg.period <= case.T:
        raise ConfigError(f"--period must lie in 1..{case.T}")
    t = cfg.period - 1
    if cfg.scenario:
        w = scenarios_from_csv(case, Path(cfg.scenario).read_text())[0]
    else:
        w = midpoint(case, plan.u)
    wt = w[:, t]
    names = [c.name or f"c{k + 1}" for k, c in enumerate(case.customers)]
    a_vals = _sweep_values(cfg, case)
    eps = cfg.eps if cfg.eps is not None else 1e-4
    try:
        central = market.solve_centralized(case, plan, t, wt)
    except MarketInfeasible as exc:
        _report_certificate(exc)
        return EXIT_INFEASIBLE
    rd = RunDir(cfg.out)
    try:
        outcomes, timing = {}, {}
        for a in a_vals:
            t0 = time.perf_counter()
            outcomes[a] = market.run_market(case, plan, t, wt, eps=eps, a=a)
            timing[f"a={a}"] = time.perf_counter() - t0
        rows = []
        for a, mo in outcomes.items():
            for r in mo.trace:
                for k in range(len(names)):
                    rows.append([a, r["iteration"], names[k], r["lam"][k], r["d"][k]])
        rd.csv("market_trace.csv", ["a", "iteration", "customer", "price", "demand"], rows)
        base = outcomes[a_vals[0]]
        eq_rows = []
        for a, mo in outcomes.items():
            for k in range(len(names)):
                eq_rows.append([a, names[k], mo.state.lam[k], mo.state.d[k], mo.state.q[k], mo.state.b[k],
                                central.eta[k], central.d[k]])
        rd.csv("equilibrium.csv", ["a", "customer", "price", "demand", "sharing", "bid", "central_dual",
                                   "central_demand"], eq_rows)
        payment = market.audit_payment(base)
        with_sharing = market.customer_costs(case, t, base.state.d, base.state.q, base.state.lam)
        alone = market.autarky(case, t, wt, base.state.lam)["cost"]
        rd.csv("costs.csv", ["customer", "with_sharing", "without_sharing"],
               [[names[k], with_sharing[k], alone[k]] for k in range(len(names))])
        limits = np.array([[*mo.state.lam, *mo.state.d] for mo in outcomes.values()])
        spread = float(np.max(np.ptp(limits, axis=0))) if len(a_vals) > 1 else 0.0
        summary = {
            "command": "market", "case": case.name, "period": cfg.period, "eps": eps,
            "sensitivities": a_vals, "iterations": [outcomes[a].iterations for a in a_vals],
            "damped": [outcomes[a].damped for a in a_vals],
            "prices": base.state.lam, "demands": base.state.d, "sharing": base.state.q,
            "central_duals": central.eta, "central_demands": central.d,
            "max_price_gap": float(np.max(np.abs(base.state.lam - central.eta))),
            "max_demand_gap": float(np.max(np.abs(base.state.d - central.d))),
            "total_payment": payment, "limit_spread_across_a": spread,
            "cost_with_sharing": float(with_sharing.sum()), "cost_without_sharing": float(alone.sum()),
            "cost_reduction_pct": float(100 * (alone.sum() - with_sharing.sum()) / abs(alone.sum()))
            if alone.sum() else 0.0,
        }
        rd.json("summary.json", summary)
        rd.json("timings.json", {"wall_seconds": timing})
        plotting.market_trace({f"a={a}": mo.trace for a, mo in outcomes.items()}, names,
                              rd.path("market_trace.png"))
        plotting.cost_comparison(names, with_sharing, alone, rd.path("costs.png"))
        out = rd.commit()
    except BaseException:
        rd.discard()
        raise
    print(f"period {cfg.period}: prices {np.round(base.state.lam, 2).tolist()} $/MWh, "
          f"demands {np.round(base.state.d, 3).tolist()} MW, {base.iterations} iterations")
    print(f"total net payment {payment:.4f} $; sharing cuts customer cost by {summary['cost_reduction_pct']:.2f}%")
    print(f"results in {out}")
    return EXIT_OK


def _report_certificate(exc: MarketInfeasible) -> None:
    print(f"market infeasible: {exc}", file=sys.stderr)
    y = exc.certificate
    if y is None:
        print("no Farkas certificate available", file=sys.stderr)
        return
    y = np.asarray(y, dtype=float)
    nz = np.flatnonzero(np.abs(y) > 1e-9)
    top = nz[np.argsort(-np.abs(y[nz]))][:5]
    parts = ", ".join(f"row {i}: {y[i]:.4g}" for i in top)
    print(f"Farkas certificate: {len(nz)} nonzero multipliers; largest {parts}", file=sys.stderr)


# dispatch ----------------------------------------------------------------------

def _trace_rows(rows: list) -> list:
    return [[r["iteration"], r["lower_bound"], r["upper_bound"], r["cut"], r["scenario_id"], r["value"]]
            for r in rows]


TRACE_HEADER = ["iteration", "lower_bound", "upper_bound", "cut", "scenario_id", "value"]


def cmd_dispatch(cfg: RunConfig) -> int:
    case = _load(cfg)
    eps = cfg.eps if cfg.eps is not None else 1e-4
    seed = cfg.need_seed("with --subproblem ad") if cfg.subproblem == "ad" else (cfg.seed or 0)
    names = [case.customers[k].name or f"p{j + 1}" for j, k in enumerate(case.prosumers)]
    rd = RunDir(cfg.out)
    try:
        try:
            if cfg.traditional:
                res = run_ccg_traditional(case, eps=eps, subproblem=cfg.subproblem)
            else:
                res = run_ccg(case, eps=eps, subproblem=cfg.subproblem, seed=seed)
        except NonConvergence as exc:
            rd.csv("trace.csv", TRACE_HEADER, _trace_rows(exc.trace or []))
            rd.json("summary.json", {"command": "dispatch", "case": case.name, "status": "not converged",
                                     "message": str(exc)})
            rd.commit()
            print(f"dispatch did not converge: {exc}", file=sys.stderr)
            return EXIT_FAIL
        except MasterInfeasible as exc:
            rd.discard()
            print(f"no day-ahead decision survives every scenario: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        st = res.state
        rows = st.trace_rows()
        rd.csv("trace.csv", TRACE_HEADER, _trace_rows(rows))
        scen_rows = []
        for r in st.records:
            for j in range(case.J):
                scen_rows.append([r.iteration, names[j], *r.scenario[j]])
        rd.csv("scenarios.csv", ["iteration", "prosumer"] + [str(t + 1) for t in range(case.T)], scen_rows)
        summary = {"command": "dispatch", "case": case.name, "method": st.method, "status": st.status,
                   "eps": eps, "subproblem": cfg.subproblem, "budgets": [case.budgets.b_s, case.budgets.b_t],
                   "iterations": st.iterations, "gap": st.gap, "objective": res.objective,
                   "lower_bounds": st.lower_bounds, "upper_bounds": st.upper_bounds}
        if res.plan is not None:
            res.plan.save(rd.path("plan.csv"))
            x = res.compact.x_from_plan(res.plan)
            br = res.compact.cost_breakdown(x)
            summary["breakdown"] = {"penalty": br["penalty"], "gas": br["gas"],
                                    "disutility": res.objective - res.compact.first_stage_cost(x)}
            summary["connection"] = res.plan.u
        rd.json("summary.json", summary)
        rd.json("timings.json", {"wall_seconds": st.wall_time,
                                 "per_iteration": [r.wall_time for r in st.records]})
        plotting.ccg_trace(rows, rd.path("trace.png"), title=st.method)
        plotting.scenario_gallery([r.scenario for r in st.records], names, rd.path("scenarios.png"))
        out = rd.commit()
    except BaseException:
        rd.discard()
        raise
    print(f"{st.method} C&CG: {st.status} after {st.iterations} iterations, objective {res.objective:.4f}")
    print(f"results in {out}")
    return EXIT_OK if st.status == "optimal" else EXIT_FAIL


# compare ---------------------------------------------------------------------

VARIANTS = (("projection", "exact"), ("projection", "ad"), ("diu", "exact"), ("diu", "ad"))


def _run_variants(job) -> list:
    label, case, exact, eps, seed = job
    out = []
    for method, sub in VARIANTS:
        mode = exact if sub == "exact" else "ad"
        fn = run_ccg if method == "projection" else run_diu
        t0 = time.perf_counter()
        res = fn(case, eps=eps, subproblem=mode, seed=seed)
        out.append({"instance": label, "method": method, "subproblem": mode, "objective": res.objective,
                    "iterations": res.state.iterations, "uncertainty_vars": res.state.mean_uncertainty_vars,
                    "wall_time": time.perf_counter() - t0})
    return out


def cmd_compare(cfg: RunConfig) -> int:
    case = _load(cfg)
    seed = cfg.need_seed("for compare (the alternating-direction runs are randomized)")
    eps = cfg.eps if cfg.eps is not None else 1e-4
    exact = cfg.subproblem if cfg.subproblem != "ad" else "decomposed"
    if cfg.instances < 0:
        raise ConfigError("--instances must be non-negative")
    jobs = [(case.name, case, exact, eps, seed)]
    rng = np.random.default_rng(seed)
    jobs += [(f"tiny{s}", tiny_case(int(s)), exact, eps, seed) for s in rng.integers(0, 10**6, cfg.instances)]
    results = [r for batch in fan_out(_run_variants, jobs) for r in batch]
    bad = []
    for label in dict.fromkeys(r["instance"] for r in results):
        rows = [r for r in results if r["instance"] == label]
        ref = rows[0]["objective"]
        for r in rows:
            r["gap"] = (ref - r["objective"]) / max(1.0, abs(ref))
        diu = next(r for r in rows if r["method"] == "diu" and r["subproblem"] == exact)["objective"]
        if abs(diu - ref) > 1e-6 * max(1.0, abs(ref)):
            bad.append(f"{label}: projection {ref} vs DIU {diu}")
    keys = ["instance", "method", "subproblem", "objective", "iterations", "uncertainty_vars", "gap"]
    rd = RunDir(cfg.out)
    try:
        rd.csv("comparison.csv", keys, [[r[k] for k in keys] for r in results])
        rd.csv("timings.csv", ["instance", "method", "subproblem", "wall_time"],
               [[r["instance"], r["method"], r["subproblem"], r["wall_time"]] for r in results])
        rd.json("summary.json", {"command": "compare", "case": case.name, "eps": eps, "exact_mode": exact,
                                 "instances": len(jobs), "consistent": not bad, "disagreements": bad})
        out = rd.commit()
    except BaseException:
        rd.discard()
        raise
    print(f"{'instance':>12} {'method':>10} {'subproblem':>10} {'objective':>14} {'iter':>5} {'gap %':>8} {'time s':>8}")
    for r in results:
        print(f"{r['instance']:>12} {r['method']:>10} {r['subproblem']:>10} {r['objective']:14.4f} "
              f"{r['iterations']:5d} {100 * r['gap']:8.3f} {r['wall_time']:8.2f}")
    print("wall times are hardware dependent; only their ordering is meaningful")
    print(f"results in {out}")
    if bad:
        print("projection and DIU disagree: " + "; ".join(bad), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# oos ---------------------------------------------------------------------------

def _oos_job(job) -> dict:
    case, plan, sigma, n, seed = job
    rep = simulate_realtime(case, plan, sample_oos(case, plan.u, sigma, n, seed))
    return rep.summary()


def cmd_oos(cfg: RunConfig) -> int:
    case = load_case(cfg.case)
    if cfg.n < 0:
        raise ConfigError("--n must be non-negative")
    seed = cfg.need_seed("for out-of-sample sampling")
    sigmas = list(cfg.sigmas)
    rows, plans = [], []
    if cfg.n > 0:
        if cfg.plan:
            plans.append(("plan", case, DayAheadPlan.load(cfg.plan, case), float("nan")))
        else:
            budgets = cfg.budgets or [UncertaintyBudget(0, 0), case.budgets, UncertaintyBudget(case.J, case.T)]
            for b in dict.fromkeys(budgets):
                cb = check_case(case.replace(budgets=b))
                try:
                    res = run_ccg(cb, eps=cfg.eps or 1e-4)
                except MasterInfeasible as exc:
                    print(f"budgets {b.b_s},{b.b_t}: no robust plan exists: {exc}", file=sys.stderr)
                    return EXIT_INFEASIBLE
                plans.append((f"{b.b_s},{b.b_t}", cb, res.plan, res.objective))
        jobs = [(cb, plan, s, cfg.n, seed) for _, cb, plan, _ in plans for s in sigmas]
        reports = fan_out(_oos_job, jobs)
        it = iter(reports)
        for label, _, _, obj in plans:
            for s in sigmas:
                rep = next(it)
                rows.append([label, obj, s, rep["n"], rep["infeasible"], rep["infeasible_rate"], rep["mean_cost"],
                             rep["std_cost"], rep["soc_violations"]])
    rd = RunDir(cfg.out)
    try:
        rd.csv("oos.csv", ["budgets", "objective", "sigma", "n", "infeasible", "infeasible_rate", "mean_cost",
                           "std_cost", "soc_violations"], rows)
        grid = [[label, obj] + [r[5] for r in rows if r[0] == label] for label, _, _, obj in plans]
        rd.csv("oos_grid.csv", ["budgets", "objective"] + [f"sigma={s}" for s in sigmas], grid)
        rd.json("summary.json", {"command": "oos", "case": case.name, "n": cfg.n, "seed": seed, "sigmas": sigmas,
                                 "rates": {g[0]: g[2:] for g in grid}})
        if grid:
            plotting.oos_grid([g[0] for g in grid], sigmas, [g[2:] for g in grid], rd.path("oos.png"))
        out = rd.commit()
    except BaseException:
        rd.discard()
        raise
    print("budgets   " + " ".join(f"{s:>8}" for s in sigmas))
    for g in grid:
        print(f"{g[0]:<9} " + " ".join(f"{100 * v:7.2f}%" for v in g[2:]))
    print(f"results in {out}")
    return EXIT_OK


# verify ------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    from . import verify

    try:
        outcomes = verify.run_suite(cfg.only, seed=cfg.seed or 0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'} {o.name} [{o.group}] {o.detail}")
    failed = [o for o in outcomes if not o.passed]
    if failed:
        print(f"first failing property: {failed[0].name}", file=sys.stderr)
        return EXIT_FAIL
    print(f"all {len(outcomes)} properties hold")
    return EXIT_OK


COMMANDS = {"market": cmd_market, "dispatch": cmd_dispatch, "compare": cmd_compare, "oos": cmd_oos,
            "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    cfg = RunConfig.from_args(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, ParseError, ValidationError, DimensionMismatch, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MarketInfeasible, MasterInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NonConvergence, AuditFailure) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
