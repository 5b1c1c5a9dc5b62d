"""Tabular reports behind the CLI subcommands.

Each ``*_rows`` function returns a list of dicts (one per output line); the
writers serialize floats with 17 significant digits so outputs are
byte-identical across runs.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import dissimilarity as dm
from . import geks as gk
from . import resampling as rs
from . import variance as vr
from .bilateral import IndexUndefinedError, Method
from .data import ComparisonDataset, DatasetError, bilateral_view, format_number
from .resampling import CRITICAL_VALUE

SCALE_150 = 150.0


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else format_number(v)
    if hasattr(v, "value") and not isinstance(v, (int, np.integer)):
        return str(v.value)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row.get(h, "")) for h in header])
    return path


def targets(dataset: ComparisonDataset, base: int) -> list[int]:
    return [j for j in range(dataset.n_locations) if j != base]


# -- bilateral -------------------------------------------------------------------

INDEX_HEADER = ["target", "base", "method", "status", "value", "log_value", "se_log",
                "ci_low_log", "ci_high_log"]


def bilateral_rows(dataset, base: int, methods, walsh_negative="error",
                   tolerate_zero_shares=False) -> list[dict]:
    """One row per (target, method); failures become a row-level status."""
    rows = []
    for j in targets(dataset, base):
        view = bilateral_view(dataset, j, base)
        for m in methods:
            row = {"target": dataset.locations[j], "base": dataset.locations[base],
                   "method": Method.parse(m).value, "value": math.nan, "log_value": math.nan,
                   "se_log": math.nan, "ci_low_log": math.nan, "ci_high_log": math.nan}
            try:
                est = vr.estimate(view, m, walsh_negative=walsh_negative,
                                  tolerate_zero_shares=tolerate_zero_shares)
            except (IndexUndefinedError, DatasetError) as exc:
                row["status"] = f"error: {exc}"
            else:
                se = est.se_log
                row.update(status="ok", value=est.value, log_value=est.log_value, se_log=se,
                           ci_low_log=est.log_value - CRITICAL_VALUE * se,
                           ci_high_log=est.log_value + CRITICAL_VALUE * se)
            rows.append(row)
    return rows


COMPARISON_HEADER = ["method", "mean_abs_log_gap_pct", "n_targets"]


def comparison_table(rows: list[dict]) -> list[dict]:
    """Mean of 100 |ln P_method - ln P_Fisher| over targets where both exist."""
    fisher = {r["target"]: r["log_value"] for r in rows
              if r["method"] == Method.FISHER.value and r["status"] == "ok"}
    gaps: dict[str, list[float]] = {}
    for r in rows:
        if r["method"] == Method.FISHER.value:
            continue
        gaps.setdefault(r["method"], [])
        if r["status"] == "ok" and r["target"] in fisher:
            gaps[r["method"]].append(100.0 * abs(r["log_value"] - fisher[r["target"]]))
    return [{"method": m, "mean_abs_log_gap_pct": float(np.mean(g)) if g else math.nan,
             "n_targets": len(g)} for m, g in gaps.items()]


# -- GEKS ------------------------------------------------------------------------

GEKS_HEADER = ["location", "base", "log_geks", "geks", "se_log_geks", "transitivity_residual"]
GAP_HEADER = ["location", "log_geks", "log_fisher", "gap_pct", "se_log_fisher"]
SE_HEADER = ["location", "se_log_geks", "se_log_fisher", "se_ratio"]


def geks_rows(dataset, base: int):
    gap = gk.geks_fisher_gap_report(dataset, base)
    pf = gk.pairwise_fisher(dataset)
    m = dataset.n_locations
    # full G[j, k] built base by base, then the worst chaining residual per location
    g = np.column_stack([gk.geks_indexes(dataset, b, pf).log_indexes for b in range(m)])
    resid = np.abs(g[:, :, None] + g[None, :, :] - g[:, None, :]).max(axis=(1, 2))
    base_label = dataset.locations[base]
    geks = [{"location": r.location, "base": base_label, "log_geks": r.log_geks,
             "geks": math.exp(r.log_geks), "se_log_geks": r.se_log_geks,
             "transitivity_residual": float(t)} for r, t in zip(gap, resid)]
    vs = [{"location": r.location, "log_geks": r.log_geks, "log_fisher": r.log_fisher,
           "gap_pct": r.gap_pct, "se_log_fisher": r.se_log_fisher}
          for r in gap if r.location != base_label]
    se = [{"location": r.location, "se_log_geks": r.se_log_geks, "se_log_fisher": r.se_log_fisher,
           "se_ratio": r.se_ratio} for r in gap if r.location != base_label]
    return geks, vs, se


# -- dissimilarity ---------------------------------------------------------------

VS_BASE_HEADER = ["target", "base", "measure", "value", "display_value", "status"]
CONTRIB_HEADER = ["target", "base", "item", "measure", "contribution"]


def display_scale(measure_id: str, scale_150: bool) -> float:
    """Presentation factor; only the variance-based measures are rescaled."""
    return SCALE_150 if scale_150 and measure_id in ("D4", "D5", "D6") else 1.0


def dissimilarity_outputs(dataset, base: int, options: dm.MeasureOptions, measures,
                          all_pairs: bool = False, scale_150: bool = False):
    m = dataset.n_locations
    matrices = {mid: np.full((m, m), np.nan) for mid in measures}
    for mid in measures:
        np.fill_diagonal(matrices[mid], 0.0)
    vs_base, contrib = [], []
    for j in range(m):
        for k in range(m):
            if j == k:
                continue
            view = bilateral_view(dataset, j, k)
            for mid in measures:
                try:
                    val = dm.measure(view, mid, options)
                except (IndexUndefinedError, ValueError) as exc:
                    if k == base:
                        vs_base.append({"target": dataset.locations[j], "base": dataset.locations[k],
                                        "measure": mid, "value": math.nan,
                                        "display_value": math.nan, "status": f"error: {exc}"})
                    continue
                matrices[mid][j, k] = val
                if k == base:
                    vs_base.append({"target": dataset.locations[j], "base": dataset.locations[k],
                                    "measure": mid, "value": val,
                                    "display_value": val * display_scale(mid, scale_150),
                                    "status": "ok"})
                if k == base or all_pairs:
                    parts = dm.contribution_table(view, mid, options)
                    contrib.extend({"target": dataset.locations[j], "base": dataset.locations[k],
                                    "item": item, "measure": mid, "contribution": float(c)}
                                   for item, c in zip(dataset.items, parts))
    return matrices, vs_base, contrib


def write_location_matrix(path, locations, matrix) -> Path:
    rows = [{"location": loc, **{c: float(v) for c, v in zip(locations, row)}}
            for loc, row in zip(locations, matrix)]
    return write_csv(path, ["location", *locations], rows)


# -- bootstrap -------------------------------------------------------------------

BOOT_HEADER = ["target", "base", "method", "log_value", "formula_se", "bootstrap_se",
               "replications", "effective_replicates", "dropped", "drop_warning", "status"]


def bootstrap_rows(dataset, base: int, methods, replications: int, seed: int, workers: int = 1,
                   walsh_negative="error", tolerate_zero_shares=False) -> list[dict]:
    rows = []
    for j in targets(dataset, base):
        for m in methods:
            stat = rs.Statistic(Method.parse(m), j, base, walsh_negative, tolerate_zero_shares)
            row = {"target": dataset.locations[j], "base": dataset.locations[base],
                   "method": Method.parse(m).value, "replications": replications}
            try:
                res = rs.bootstrap_se(dataset, rs.BootstrapConfig(replications, seed, stat), workers)
            except (IndexUndefinedError, DatasetError, ValueError) as exc:
                row.update(status=f"error: {exc}", log_value=math.nan, formula_se=math.nan,
                           bootstrap_se=math.nan, effective_replicates=0, dropped=replications,
                           drop_warning=True)
            else:
                row.update(status="ok", log_value=res.log_value, formula_se=res.delta_se_log,
                           bootstrap_se=res.se_log, effective_replicates=res.replicate_count_effective,
                           dropped=res.dropped, drop_warning=res.drop_warning)
            rows.append(row)
    return rows


COVERAGE_HEADER = ["method", "replications", "coverage", "mean_se", "empirical_sd", "mean_error"]


def coverage_rows(spec: rs.GeneratorSpec, methods, replications: int, seed: int,
                  workers: int = 1) -> list[dict]:
    out = []
    for m in methods:
        rep = rs.coverage_experiment(spec, m, replications, seed, workers=workers)
        out.append({"method": rep.method.value, "replications": rep.replications,
                    "coverage": rep.coverage, "mean_se": rep.mean_se,
                    "empirical_sd": rep.empirical_sd, "mean_error": rep.mean_error})
    return out


def ok_rows(rows, method=None):
    return [r for r in rows if r.get("status", "ok") == "ok"
            and (method is None or r["method"] == method)]


def by_method(rows) -> dict:
    out: dict[str, list[dict]] = {}
    for r in ok_rows(rows):
        out.setdefault(r["method"], []).append(r)
    return out


def fisher_lookup(rows) -> dict:
    return {r["target"]: r for r in ok_rows(rows, Method.FISHER.value)}

