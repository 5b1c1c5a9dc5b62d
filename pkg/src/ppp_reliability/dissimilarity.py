"""Price dissimilarity measures between two locations.

D1-D3 are Diewert's share-weighted deviation measures around the Fisher (D1,
D2) and Törnqvist (D3) indexes. D4-D6 are the log-index variances of Fisher,
Walsh and a logarithmic index. Each measure is a sum of per-item
contributions, which :func:`contribution_table` exposes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bilateral as bl
from . import variance as vr
from .bilateral import Method, WeightKind
from .data import BilateralView, ComparisonDataset, view_from_arrays

MEASURES = ("D1", "D2", "D3", "D4", "D5", "D6")

D6_METHODS = {
    Method.TORNQVIST: WeightKind.ARITHMETIC,
    Method.SATO_VARTIA: WeightKind.LOGARITHMIC,
    Method.PRODUCT_DUMMY: WeightKind.HARMONIC,
}


@dataclass(frozen=True)
class MeasureOptions:
    d6_method: Method = Method.TORNQVIST
    walsh_negative: str = "error"
    tolerate_zero_shares: bool = False


@dataclass(frozen=True)
class DissimilarityReport:
    pair: tuple
    values: dict
    contributions: dict
    d6_index_method: Method = Method.TORNQVIST


def _d6_scheme(view, opts):
    method = Method.parse(opts.d6_method)
    if method not in D6_METHODS:
        raise ValueError(f"D6 needs a logarithmic index, got {method.value}")
    return bl.weight_scheme(view, D6_METHODS[method], opts.tolerate_zero_shares)


def contribution_table(view: BilateralView, measure_id: str,
                       options: MeasureOptions = MeasureOptions()) -> np.ndarray:
    """Per-item summands of a measure, in item order."""
    m = measure_id.upper()
    if m in ("D1", "D2"):
        w = 0.5 * (view.shares_j + view.shares_k)
        x = view.price_ratio / bl.fisher(view).value
        if m == "D1":
            return w * ((x - 1.0) ** 2 + (1.0 / x - 1.0) ** 2)
        return w * (x + 1.0 / x - 2.0)
    if m == "D3":
        w = 0.5 * (view.shares_j + view.shares_k)
        t = bl.log_weighted_index(view, bl.weight_scheme(view, WeightKind.ARITHMETIC)).log_value
        return w * (np.log(view.price_ratio) - t) ** 2
    if m == "D4":
        return fisher_contributions(view)
    if m == "D5":
        return vr.walsh_terms(view, options.walsh_negative) ** 2
    if m == "D6":
        return vr.log_weighted_terms(view, _d6_scheme(view, options)) ** 2
    raise ValueError(f"unknown measure {measure_id!r}")


def fisher_contributions(view: BilateralView) -> np.ndarray:
    u = vr.fisher_scores(view).scores
    return u * u


def measure(view: BilateralView, measure_id: str, options: MeasureOptions = MeasureOptions()) -> float:
    m = measure_id.upper()
    # D4-D6 route through the variance module so they match it bit for bit
    if m == "D4":
        return vr.var_log_fisher(view)
    if m == "D5":
        return vr.var_log_walsh(view, options.walsh_negative)
    if m == "D6":
        return vr.var_log_weighted(view, _d6_scheme(view, options))
    return float(contribution_table(view, m, options).sum())


def diewert_measures(view: BilateralView) -> dict:
    out = {m: measure(view, m) for m in ("D1", "D2", "D3")}
    if out["D2"] < 0:
        warnings.warn(f"D2 negative ({out['D2']!r}) for ({view.j},{view.k})",
                      RuntimeWarning, stacklevel=2)
    return out


def variance_measures(view: BilateralView, d6_method=Method.TORNQVIST, *,
                      walsh_negative: str = "error", tolerate_zero_shares: bool = False) -> dict:
    opts = MeasureOptions(Method.parse(d6_method), walsh_negative, tolerate_zero_shares)
    return {m: measure(view, m, opts) for m in ("D4", "D5", "D6")}


def dissimilarity_report(view: BilateralView, options: MeasureOptions = MeasureOptions(),
                         measures=MEASURES) -> DissimilarityReport:
    values, contribs = {}, {}
    for m in measures:
        contribs[m] = contribution_table(view, m, options)
        values[m] = measure(view, m, options)
    if "D2" in values and values["D2"] < 0:
        warnings.warn(f"D2 negative ({values['D2']!r}) for ({view.j},{view.k})",
                      RuntimeWarning, stacklevel=2)
    return DissimilarityReport((view.j, view.k), values, contribs, Method.parse(options.d6_method))


def dissimilarity_matrix(dataset: ComparisonDataset, measure_id: str,
                         options: MeasureOptions = MeasureOptions()) -> np.ndarray:
    """M x M matrix of one measure over all ordered location pairs."""
    from .data import bilateral_view

    m = dataset.n_locations
    out = np.zeros((m, m))
    for j in range(m):
        for k in range(m):
            if j != k:
                out[j, k] = measure(bilateral_view(dataset, j, k), measure_id, options)
    return out


# -- axiom checks --------------------------------------------------------------

AXIOMS = (
    "identity (D_jj = 0)",
    "nonnegativity",
    "symmetry",
    "proportional prices give zero",
    "zero only for proportional prices",
    "invariance to item ordering",
    "invariance to units of measurement",
)


@dataclass
class AxiomReport:
    measure_id: str
    trials: int
    max_violation: list = field(default_factory=lambda: [0.0] * 7)

    def passed(self, tol: float = 1e-10) -> list[bool]:
        return [v < tol for v in self.max_violation]

    @property
    def all_passed(self) -> bool:
        return all(self.passed())

    def lines(self, tol: float = 1e-10) -> list[str]:
        return [f"{self.measure_id} axiom {i + 1} ({name}): "
                f"{'pass' if ok else 'FAIL'} max violation {v:.3e}"
                for i, (name, v, ok) in enumerate(zip(AXIOMS, self.max_violation, self.passed(tol)))]


def _scale(value, reference):
    return abs(value) / max(1.0, abs(reference))


def axiom_check(measure_id: str, dataset_or_generator, trials: int = 100, seed: int = 0,
                options: MeasureOptions = MeasureOptions()) -> AxiomReport:
    """Randomized check of Diewert's seven axioms for one measure.

    ``dataset_or_generator`` is either a dataset, whose location pairs are
    sampled, or a callable ``f(rng) -> ComparisonDataset`` producing a fresh
    instance per trial. Violations are reported, never raised; for the
    "only if" axiom a violation is a nonpositive value on a pair whose prices
    are not proportional (counted as 1.0).
    """
    rng = np.random.default_rng(seed)
    rep = AxiomReport(measure_id.upper(), trials)
    mv = rep.max_violation

    def f(v):
        return measure(v, measure_id, options)

    for _ in range(trials):
        ds = dataset_or_generator(rng) if callable(dataset_or_generator) else dataset_or_generator
        j, k = rng.choice(ds.n_locations, size=2, replace=False)
        pj, pk = ds.prices[:, j], ds.prices[:, k]
        ej, ek = ds.expenditures[:, j], ds.expenditures[:, k]
        v = view_from_arrays(pj, pk, ej, ek)
        d = f(v)
        mv[0] = max(mv[0], abs(f(view_from_arrays(pj, pj, ej, ej))))
        mv[1] = max(mv[1], max(0.0, -d))
        mv[2] = max(mv[2], _scale(d - f(v.reversed()), d))
        lam = float(np.exp(rng.normal()))
        mv[3] = max(mv[3], abs(f(view_from_arrays(lam * pk, pk, ej, ek))))
        proportional = np.ptp(np.log(pj / pk)) < 1e-12
        if not proportional and not d > 0:
            mv[4] = max(mv[4], 1.0)
        perm = rng.permutation(len(pj))
        mv[5] = max(mv[5], _scale(d - f(view_from_arrays(pj[perm], pk[perm], ej[perm], ek[perm])), d))
        c = np.exp(rng.normal(scale=2.0, size=len(pj)))
        mv[6] = max(mv[6], _scale(d - f(view_from_arrays(pj * c, pk * c, ej, ek)), d))
    return rep
