"""PNG figures written next to the CSV reports (headless Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def index_gap_figure(rows, path) -> Path:
    """Log gap of each method from Fisher, per target location."""
    fisher = {r["target"]: r["log_value"] for r in rows
              if r["method"] == "fisher" and r["status"] == "ok"}
    fig, ax = plt.subplots(figsize=(7, 4))
    methods = [m for m in dict.fromkeys(r["method"] for r in rows) if m != "fisher"]
    labels = list(fisher)
    x = np.arange(len(labels))
    width = 0.8 / max(len(methods), 1)
    for i, m in enumerate(methods):
        vals = {r["target"]: 100.0 * (r["log_value"] - fisher[r["target"]])
                for r in rows if r["method"] == m and r["status"] == "ok" and r["target"] in fisher}
        ax.bar(x + i * width, [vals.get(t, np.nan) for t in labels], width, label=m)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(x + 0.4 - width / 2, labels, rotation=45, ha="right")
    ax.set_ylabel("100 x (ln P - ln Fisher)")
    if methods:
        ax.legend(fontsize="small")
    return _save(fig, path)


def se_comparison_figure(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for m in dict.fromkeys(r["method"] for r in rows):
        ok = [r for r in rows if r["method"] == m and r["status"] == "ok"]
        ax.plot([r["target"] for r in ok], [r["se_log"] for r in ok], marker="o", label=m)
    ax.set_ylabel("SE of log index")
    ax.tick_params(axis="x", rotation=45)
    ax.legend(fontsize="small")
    return _save(fig, path)


def geks_figure(gap_rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    locs = [r["location"] for r in gap_rows]
    ax.errorbar(locs, [r["log_fisher"] for r in gap_rows],
                yerr=[1.96 * r["se_log_fisher"] for r in gap_rows], fmt="o", label="Fisher", capsize=3)
    ax.plot(locs, [r["log_geks"] for r in gap_rows], "s", label="GEKS")
    ax.set_ylabel("log parity vs base")
    ax.tick_params(axis="x", rotation=45)
    ax.legend()
    return _save(fig, path)


def se_ratio_figure(se_rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([r["location"] for r in se_rows], [r["se_ratio"] for r in se_rows])
    ax.axhline(1.0, color="black", lw=0.8)
    ax.set_ylabel("SE(GEKS) / SE(Fisher)")
    ax.tick_params(axis="x", rotation=45)
    return _save(fig, path)


def dissimilarity_figure(vs_base, path) -> Path:
    """D1 against 150 x D4 for each target location."""
    d1 = {r["target"]: r["value"] for r in vs_base if r["measure"] == "D1" and r["status"] == "ok"}
    d4 = {r["target"]: 150.0 * r["value"] for r in vs_base
          if r["measure"] == "D4" and r["status"] == "ok"}
    common = [t for t in d1 if t in d4]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter([d1[t] for t in common], [d4[t] for t in common])
    for t in common:
        ax.annotate(t, (d1[t], d4[t]), fontsize="small")
    hi = max([*d1.values(), *d4.values(), 1e-12])
    ax.plot([0, hi], [0, hi], color="grey", lw=0.8)
    ax.set_xlabel("D1")
    ax.set_ylabel("150 x D4")
    return _save(fig, path)


def bootstrap_figure(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    for m in dict.fromkeys(r["method"] for r in rows):
        ok = [r for r in rows if r["method"] == m and r["status"] == "ok"]
        ax.scatter([r["formula_se"] for r in ok], [r["bootstrap_se"] for r in ok], label=m)
    hi = max([r["formula_se"] for r in rows if r["status"] == "ok"] + [1e-12])
    ax.plot([0, hi], [0, hi], color="grey", lw=0.8)
    ax.set_xlabel("formula SE")
    ax.set_ylabel("bootstrap SE")
    ax.legend(fontsize="small")
    return _save(fig, path)
