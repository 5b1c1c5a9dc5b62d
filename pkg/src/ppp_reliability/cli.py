"""Command line entry point: ``ppp-reliability <command> ...``.

Exit codes: 0 success, 1 input error, 2 validation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import dissimilarity as dm
from . import properties as pr
from . import reports as rp
from . import resampling as rs
from .bilateral import BILATERAL_METHODS, Method
from .data import DatasetError, load_dataset, write_dataset

log = logging.getLogger("ppp_reliability")

EXIT_OK, EXIT_INPUT, EXIT_VALIDATION = 0, 1, 2


def _methods(text: str | None, default) -> list[Method]:
    if not text:
        return list(default)
    return [Method.parse(t.strip()) for t in text.split(",") if t.strip()]


def _base(dataset, text):
    if text is None:
        return dataset.n_locations - 1
    if text.lstrip("-").isdigit() and text not in dataset.locations:
        i = int(text)
        return dataset.location_index(i + dataset.n_locations if i < 0 else i)
    return dataset.location_index(text)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _figures(args) -> bool:
    return not args.no_figures


def run_bilateral(args) -> list[Path]:
    ds = load_dataset(args.prices, args.expenditures)
    base = _base(ds, args.base)
    out = _out(args)
    methods = _methods(args.methods, BILATERAL_METHODS)
    rows = rp.bilateral_rows(ds, base, methods, args.walsh_negative, args.tolerate_zero_shares)
    files = [rp.write_csv(out / "indexes.csv", rp.INDEX_HEADER, rows),
             rp.write_csv(out / "comparison_table.csv", rp.COMPARISON_HEADER, rp.comparison_table(rows))]
    for r in rows:
        if r["status"] != "ok":
            log.warning("%s vs %s %s: %s", r["target"], r["base"], r["method"], r["status"])
    if _figures(args):
        from . import plotting

        files += [plotting.index_gap_figure(rows, out / "index_gap.png"),
                  plotting.se_comparison_figure(rows, out / "se_comparison.png")]
    log.info("wrote %d index rows to %s", len(rows), out)
    return files


def run_geks(args) -> list[Path]:
    ds = load_dataset(args.prices, args.expenditures)
    base = _base(ds, args.base)
    out = _out(args)
    geks, vs, se = rp.geks_rows(ds, base)
    files = [rp.write_csv(out / "geks.csv", rp.GEKS_HEADER, geks),
             rp.write_csv(out / "geks_vs_fisher.csv", rp.GAP_HEADER, vs),
             rp.write_csv(out / "se_compare.csv", rp.SE_HEADER, se)]
    if _figures(args):
        from . import plotting

        files += [plotting.geks_figure(vs, out / "geks_vs_fisher.png"),
                  plotting.se_ratio_figure(se, out / "se_ratio.png")]
    log.info("wrote GEKS results for %d locations to %s", len(geks), out)
    return files


def run_dissimilarity(args) -> list[Path]:
    ds = load_dataset(args.prices, args.expenditures)
    base = _base(ds, args.base)
    out = _out(args)
    measures = [m.strip().upper() for m in args.measures.split(",")] if args.measures else list(dm.MEASURES)
    bad = [m for m in measures if m not in dm.MEASURES]
    if bad:
        raise ValueError(f"unknown measure(s): {', '.join(bad)}")
    opts = dm.MeasureOptions(Method.parse(args.d6_method), args.walsh_negative,
                             args.tolerate_zero_shares)
    matrices, vs_base, contrib = rp.dissimilarity_outputs(ds, base, opts, measures,
                                                         args.all_pairs, args.scale_150)
    files = [rp.write_location_matrix(out / f"dissimilarity_{mid}.csv", ds.locations, mat)
             for mid, mat in matrices.items()]
    files += [rp.write_csv(out / "dissimilarity_vs_base.csv", rp.VS_BASE_HEADER, vs_base),
              rp.write_csv(out / "contributions.csv", rp.CONTRIB_HEADER, contrib)]
    for r in vs_base:
        if r["measure"] == "D2" and r["status"] == "ok" and r["value"] < 0:
            log.warning("D2 negative for %s vs %s", r["target"], r["base"])
    if _figures(args) and {"D1", "D4"} <= set(measures):
        from . import plotting

        files.append(plotting.dissimilarity_figure(vs_base, out / "d1_vs_d4.png"))
    return files


def run_bootstrap(args) -> list[Path]:
    ds = load_dataset(args.prices, args.expenditures)
    base = _base(ds, args.base)
    out = _out(args)
    methods = _methods(args.methods, (Method.FISHER, Method.TORNQVIST))
    rows = rp.bootstrap_rows(ds, base, methods, args.replications, args.seed, args.workers,
                             args.walsh_negative, args.tolerate_zero_shares)
    files = [rp.write_csv(out / "bootstrap.csv", rp.BOOT_HEADER, rows)]
    for r in rows:
        if r["status"] != "ok":
            log.warning("%s %s: %s", r["target"], r["method"], r["status"])
        elif r["drop_warning"]:
            log.warning("%s %s: %d of %d replicates dropped", r["target"], r["method"],
                        r["dropped"], r["replications"])
    if _figures(args):
        from . import plotting

        files.append(plotting.bootstrap_figure(rows, out / "bootstrap_se.png"))
    return files


def run_validate(args) -> pr.PropertyReport:
    out = _out(args)
    report = pr.run_all_properties(args.seed, args.trials, bootstrap=not args.no_bootstrap)
    results = list(report.results)
    if args.prices or args.expenditures:
        if not (args.prices and args.expenditures):
            raise ValueError("--prices and --expenditures must be given together")
        ds = load_dataset(args.prices, args.expenditures)
        for mid in dm.MEASURES:
            try:
                ax = dm.axiom_check(mid, ds, trials=args.trials, seed=args.seed)
            except (ValueError, ArithmeticError) as exc:
                log.warning("dataset axiom check for %s skipped: %s", mid, exc)
                continue
            for i, (name, v) in enumerate(zip(dm.AXIOMS, ax.max_violation)):
                r = pr.PropertyResult(f"dataset {mid} axiom {i + 1}: {name}", "supplied dataset",
                                      pr.ROUTE_TOL)
                r.checks, r.max_violation = args.trials, v
                results.append(r)
        report = pr.PropertyReport(report.seed, report.trials, results)
    lines = report.lines()
    (out / "validation_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    rp.write_csv(out / "validation.csv",
                 ["name", "anchor", "tolerance", "max_violation", "checks", "enforced", "passed"],
                 [{"name": r.name, "anchor": r.anchor, "tolerance": float(r.tolerance),
                   "max_violation": float(r.max_violation), "checks": r.checks,
                   "enforced": r.enforced, "passed": r.passed} for r in results])
    for line in lines:
        print(line)
    return report


def run_simulate(args) -> list[Path]:
    out = _out(args)
    levels = tuple(float(x) for x in args.levels.split(","))
    spec = rs.GeneratorSpec(args.n_items, levels, rs.ErrorSpec(args.sigma, args.correlation),
                            dirichlet_alpha=args.dirichlet_alpha)
    sim = rs.simulate(spec, args.seed)
    files = [out / "prices.csv", out / "expenditures.csv"]
    write_dataset(sim.dataset, *files)
    files.append(rp.write_csv(out / "truth.csv", ["location", "log_level"],
                 [{"location": loc, "log_level": float(v)}
                  for loc, v in zip(sim.dataset.locations, sim.log_levels)]))
    if args.coverage_replications:
        methods = _methods(args.methods, (Method.FISHER, Method.TORNQVIST))
        rows = rp.coverage_rows(spec, methods, args.coverage_replications, args.seed, args.workers)
        files.append(rp.write_csv(out / "coverage.csv", rp.COVERAGE_HEADER, rows))
        for r in rows:
            print(f"{r['method']}: coverage {r['coverage']:.3f} over {r['replications']} replications")
    return files


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppp-reliability",
                                description="Price parities with standard errors and dissimilarity measures")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_cmd(name, help_text, func):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--prices", required=True, help="prices CSV (item,LOC1,...)")
        s.add_argument("--expenditures", required=True, help="expenditures CSV, same layout")
        s.add_argument("--base", help="base location label or column position (default: last)")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=0, help="master seed for resampling")
        s.add_argument("--walsh-negative", choices=("error", "drop"), default="error")
        s.add_argument("--tolerate-zero-shares", action="store_true")
        s.add_argument("--no-figures", action="store_true", help="skip PNG figures")
        s.set_defaults(func=func)
        return s

    s = data_cmd("bilateral", "bilateral indexes and their SEs", run_bilateral)
    s.add_argument("--methods", help="comma list (default: all bilateral methods)")

    data_cmd("geks", "GEKS parities, SEs and comparison with Fisher", run_geks)

    s = data_cmd("dissimilarity", "dissimilarity measures D1-D6", run_dissimilarity)
    s.add_argument("--measures", help="comma list of D1..D6 (default: all)")
    s.add_argument("--d6-method", choices=("tornqvist", "sv", "pd"), default="tornqvist")
    s.add_argument("--scale-150", action="store_true",
                   help="also report D4-D6 multiplied by 150 in display_value")
    s.add_argument("--all-pairs", action="store_true", help="contributions for every ordered pair")

    s = data_cmd("bootstrap", "bootstrap SEs next to the formula SEs", run_bootstrap)
    s.add_argument("--methods", help="comma list (default: fisher,tornqvist)")
    s.add_argument("--replications", type=int, default=2000)
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("validate", help="run the numerical property suite")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--no-bootstrap", action="store_true")
    s.add_argument("--prices")
    s.add_argument("--expenditures")
    s.add_argument("--out", default=".")
    s.set_defaults(func=run_validate)

    s = sub.add_parser("simulate", help="synthetic law-of-one-price data and coverage runs")
    s.add_argument("--n-items", type=int, default=150)
    s.add_argument("--levels", default="0.5,0.0", help="true log price levels, comma separated")
    s.add_argument("--sigma", type=float, default=0.2)
    s.add_argument("--correlation", type=float, default=0.0)
    s.add_argument("--dirichlet-alpha", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--coverage-replications", type=int, default=0)
    s.add_argument("--methods", help="methods for the coverage run (default: fisher,tornqvist)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=".")
    s.set_defaults(func=run_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        result = args.func(args)
    except (DatasetError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    if isinstance(result, pr.PropertyReport) and not result.passed:
        log.error("validation failed")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
