"""PNG figures written next to the CSV results (Agg backend, no display)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps re-runs byte-identical
_META = {"Software": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def market_trace(traces: dict, names: list, path) -> None:
    """Prices and demands per iteration; ``traces`` maps a label to a list of {lam, d} rows."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for label, rows in traces.items():
        it = [r["iteration"] for r in rows]
        lam = np.array([r["lam"] for r in rows])
        d = np.array([r["d"] for r in rows])
        for k, nm in enumerate(names):
            tag = nm if len(traces) == 1 else f"{nm} ({label})"
            ax1.plot(it, lam[:, k], label=tag)
            ax2.plot(it, d[:, k], label=tag)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("sharing price ($/MWh)")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("elastic demand (MW)")
    ax1.legend(fontsize=7)
    _save(fig, path)


def cost_comparison(names: list, with_sharing, without_sharing, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    pos = np.arange(len(names))
    ax.bar(pos - 0.2, without_sharing, 0.4, label="without sharing")
    ax.bar(pos + 0.2, with_sharing, 0.4, label="with sharing")
    ax.set_xticks(pos)
    ax.set_xticklabels(names)
    ax.set_ylabel("cost ($)")
    ax.legend(fontsize=8)
    _save(fig, path)


def ccg_trace(rows: list, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    it = [r["iteration"] for r in rows]
    ub = [r["upper_bound"] if np.isfinite(r["upper_bound"]) else np.nan for r in rows]
    ax.plot(it, [r["lower_bound"] for r in rows], "o-", label="lower bound")
    ax.plot(it, ub, "s--", label="upper bound")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective ($)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)


def scenario_gallery(scenarios: list, names: list, path) -> None:
    """One panel per worst-case scenario, prosumer outputs over the horizon."""
    n = max(len(scenarios), 1)
    cols = min(n, 4)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 2.4 * rows), squeeze=False)
    for i, ax in enumerate(axes.flat):
        if i >= len(scenarios):
            ax.axis("off")
            continue
        w = np.asarray(scenarios[i])
        for j in range(w.shape[0]):
            ax.plot(np.arange(1, w.shape[1] + 1), w[j], marker=".", label=names[j])
        ax.set_title(f"iteration {i + 1}", fontsize=9)
        ax.set_xlabel("period", fontsize=8)
    axes.flat[0].set_ylabel("renewable output (MW)", fontsize=8)
    axes.flat[0].legend(fontsize=7)
    _save(fig, path)


def oos_grid(labels: list, sigmas: list, rates, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    rates = np.asarray(rates, dtype=float)
    for i, lab in enumerate(labels):
        ax.plot(sigmas, 100 * rates[i], "o-", label=lab)
    ax.set_xlabel("sigma fraction")
    ax.set_ylabel("infeasible rate (%)")
    ax.legend(fontsize=8)
    _save(fig, path)
