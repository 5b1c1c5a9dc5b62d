"""Random instances and the invariant suite run by ``validate``.

Tolerance policy: 1e-12 relative for algebraic rearrangements of the same
sum, 1e-10 for identities between independent computational routes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import bilateral as bl
from . import dissimilarity as dm
from . import geks as gk
from . import lop
from . import resampling as rs
from . import variance as vr
from .bilateral import Method, WeightKind
from .data import ComparisonDataset, bilateral_view, view_from_arrays

ALGEBRAIC_TOL = 1e-12
ROUTE_TOL = 1e-10


class ShareRegime(str, enum.Enum):
    POSITIVE_DIRICHLET = "positive"
    WITH_NEGATIVE_HEADING = "negative_heading"


@dataclass(frozen=True)
class InstanceSpec:
    n_items: int = 10
    n_locations: int = 3
    share_regime: ShareRegime = ShareRegime.POSITIVE_DIRICHLET
    price_dispersion: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.n_items <= 50:
            raise ValueError("n_items must be in 2..50")
        if not 2 <= self.n_locations <= 8:
            raise ValueError("n_locations must be in 2..8")
        if not self.price_dispersion > 0:
            raise ValueError("price_dispersion must be positive")


def random_instance(spec: InstanceSpec) -> ComparisonDataset:
    """Deterministic random dataset for property checks.

    Positive regime: every share exceeds 0.5/N (at least 0.01 for N <= 50).
    Negative-heading regime: the last item has negative expenditure in every
    location while each location total stays positive.
    """
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n_items, spec.n_locations
    levels = rng.normal(scale=1.0, size=m)
    effects = rng.normal(scale=1.0, size=n)
    log_p = levels[None, :] + effects[:, None] + rng.normal(scale=spec.price_dispersion, size=(n, m))
    shares = 0.5 / n + 0.5 * rng.dirichlet(np.ones(n), size=m).T
    totals = np.exp(rng.normal(loc=5.0, scale=1.0, size=m))
    expend = shares * totals[None, :]
    if ShareRegime(spec.share_regime) is ShareRegime.WITH_NEGATIVE_HEADING:
        others = expend[:-1].sum(axis=0)
        expend[-1] = -rng.uniform(0.05, 0.3, size=m) * others
    return ComparisonDataset([f"i{x}" for x in range(n)], [f"c{x}" for x in range(m)],
                             np.exp(log_p), expend)


def instance_generator(share_regime=ShareRegime.POSITIVE_DIRICHLET, max_items=50,
                       max_locations=8, min_locations=2):
    """Callable drawing a fresh random instance from an rng (for axiom checks)."""
    def draw(rng):
        return random_instance(InstanceSpec(
            int(rng.integers(2, max_items + 1)), int(rng.integers(min_locations, max_locations + 1)),
            share_regime, float(rng.uniform(0.05, 1.0)), int(rng.integers(2**31))))
    return draw


def rel_gap(a, b) -> float:
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def geks_oracle_gap(var_log, oracle, base: int) -> float:
    """Relative gap off the base; at the base (exactly 0 by normalization) the
    oracle's cancellation noise is measured against the largest variance."""
    var_log, oracle = np.asarray(var_log, dtype=float), np.asarray(oracle, dtype=float)
    scale = max(np.abs(oracle).max(), 1e-300)
    gaps = [rel_gap(a, o) for i, (a, o) in enumerate(zip(var_log, oracle)) if i != base]
    gaps.append(abs(var_log[base] - oracle[base]) / scale)
    return max(gaps)


def quantity_swapped(view) -> object:
    """View with the two quantity vectors interchanged, prices kept."""
    qj, qk = view.quantities_j, view.quantities_k
    return view_from_arrays(view.prices_j, view.prices_k, view.prices_j * qk,
                            view.prices_k * qj, view.j, view.k)


def dense_geks_variance(dataset: ComparisonDataset, base=None) -> np.ndarray:
    """Oracle: materialize the 2M x 2M covariance of the stacked log-Fishers.

    Every entry is one ``cov_log_fisher`` call on freshly built views, then
    Var = 1' Sigma 1 / M^2 for each location.
    """
    m = dataset.n_locations
    b = m - 1 if base is None else dataset.location_index(base)
    out = np.zeros(m)
    for j in range(m):
        pairs = [(j, k) for k in range(m)] + [(k, b) for k in range(m)]
        views = [bilateral_view(dataset, x, y) for x, y in pairs]
        sigma = np.empty((2 * m, 2 * m))
        for r, vr_ in enumerate(views):
            for c, vc in enumerate(views):
                sigma[r, c] = vr.cov_log_fisher(vr_, vc)
        ones = np.ones(2 * m)
        out[j] = ones @ sigma @ ones / m**2
    return out


@dataclass
class PropertyResult:
    name: str
    anchor: str
    tolerance: float
    max_violation: float = 0.0
    checks: int = 0
    enforced: bool = True

    def update(self, violation: float) -> None:
        self.checks += 1
        if math.isnan(violation):
            violation = math.inf
        self.max_violation = max(self.max_violation, violation)

    @property
    def passed(self) -> bool:
        return self.max_violation < self.tolerance or not self.enforced


@dataclass
class PropertyReport:
    seed: int
    trials: int
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "pass" if r.max_violation < r.tolerance else ("FAIL" if r.enforced else "note")
            out.append(f"{status:4}  {r.name:<44} max={r.max_violation:.3e} tol={r.tolerance:.0e} "
                       f"n={r.checks}  [{r.anchor}]")
        return out


_LOG_METHODS = (Method.FISHER, Method.WALSH, Method.TORNQVIST, Method.SATO_VARTIA,
                Method.PRODUCT_DUMMY)


def _check_view_properties(view, rng, res):
    # bilateral
    rev = view.reversed()
    for m in _LOG_METHODS:
        res["time reversal"].update(abs(bl.compute_index(view, m).log_value
                                        + bl.compute_index(rev, m).log_value))
    res["Laspeyres/Paasche reversal"].update(
        abs(bl.laspeyres(view).log_value + bl.paasche(rev).log_value))
    swapped = quantity_swapped(view)
    res["Fisher quantity reversal"].update(rel_gap(bl.fisher(view).value, bl.fisher(swapped).value))
    self_view = view_from_arrays(view.prices_k, view.prices_k, view.expenditures_k, view.expenditures_k)
    lam = float(np.exp(rng.normal()))
    prop = view_from_arrays(lam * view.prices_k, view.prices_k, view.expenditures_j, view.expenditures_k)
    c = np.exp(rng.normal(scale=2.0, size=view.n_items))
    scaled = view_from_arrays(view.prices_j * c, view.prices_k * c, view.expenditures_j,
                              view.expenditures_k)
    lo, hi = view.price_ratio.min(), view.price_ratio.max()
    for m in bl.BILATERAL_METHODS:
        res["identity"].update(abs(bl.compute_index(self_view, m).value - 1.0))
        res["proportionality"].update(rel_gap(bl.compute_index(prop, m).value, lam))
        p = bl.compute_index(view, m).value
        res["unit invariance"].update(rel_gap(p, bl.compute_index(scaled, m).value))
        res["mean value"].update(max(0.0, (lo - p) / lo, (p - hi) / hi))
    # variance
    bundle = vr.lp_variance_bundle(view)
    direct = vr.var_log_fisher(view)
    res["Fisher variance: composed vs direct"].update(rel_gap(bundle.fisher_variance(), direct))
    res["Fisher level variance ratio"].update(
        rel_gap(vr.var_fisher_level(view) / direct, bl.fisher(view).value ** 2) if direct > 0 else 0.0)
    res["Fisher variance symmetry"].update(rel_gap(direct, vr.var_log_fisher(rev)))
    res["Fisher variance quantity reversal"].update(rel_gap(direct, vr.var_log_fisher(swapped)))
    schemes = [bl.weight_scheme(view, k) for k in WeightKind]
    variances = [direct, vr.var_log_walsh(view), bundle.var_log_laspeyres, bundle.var_log_inv_paasche]
    variances += [vr.var_log_weighted(view, s) for s in schemes]
    scaled_var = [vr.var_log_fisher(scaled), vr.var_log_walsh(scaled),
                  vr.lp_variance_bundle(scaled).var_log_laspeyres,
                  vr.lp_variance_bundle(scaled).var_log_inv_paasche]
    scaled_var += [vr.var_log_weighted(scaled, bl.weight_scheme(scaled, k)) for k in WeightKind]
    res["variance unit invariance"].update(max(rel_gap(a, b) for a, b in zip(variances, scaled_var)))
    res["variance nonnegativity"].update(max(0.0, -min(variances)))
    res["Cauchy-Schwarz on Laspeyres/Paasche cov"].update(
        max(0.0, abs(bundle.cov_log) - math.sqrt(bundle.var_log_laspeyres * bundle.var_log_inv_paasche)))
    # dissimilarity
    for mid in dm.MEASURES:
        d = dm.measure(view, mid)
        res["measure symmetry"].update(rel_gap(d, dm.measure(rev, mid)))
        res["contributions sum to measure"].update(rel_gap(d, dm.contribution_table(view, mid).sum()))
    res["D4 quantity reversal"].update(rel_gap(dm.measure(view, "D4"), dm.measure(swapped, "D4")))
    res["D5 quantity reversal"].update(rel_gap(dm.measure(view, "D5"), dm.measure(swapped, "D5")))
    n = int(rng.integers(view.n_items))
    for t in (-0.2, 0.0, 0.3):
        pj = view.prices_k.copy() * 1.7
        pj[n] *= 1.0 + t
        pert = view_from_arrays(pj, view.prices_k, view.expenditures_j, view.expenditures_k)
        for mid in dm.MEASURES:
            d = dm.measure(pert, mid)
            res["single-item perturbation"].update(abs(d) if t == 0.0 else (0.0 if d > 0 else 1.0))
    # law-of-one-price route
    for w in lop.LevelWeighting:
        sol = lop.solve_lop_level(view, w)
        est = vr.estimate(view, sol.method)
        res["LOP route: index"].update(rel_gap(sol.parity, est.value))
        res["LOP route: variance"].update(rel_gap(lop.lop_variance_log(sol, view), est.var_log))
        scale = float(np.abs(sol.weights * view.prices_j).max())
        res["LOP moment residual"].update(np.abs(lop.level_moment_residual(sol, view)).max() / scale)
    for w in lop.LogWeighting:
        sol = lop.solve_lop_log(view, w)
        est = vr.estimate(view, sol.method)
        res["LOP route: index"].update(abs(sol.log_parity - est.log_value))
        res["LOP route: variance"].update(rel_gap(lop.lop_log_variance(sol, view), est.var_log))
        res["LOP moment residual"].update(np.abs(lop.log_moment_residual(sol, view)).max())


def _check_dataset_properties(ds, rng, res):
    m = ds.n_locations
    pf = gk.pairwise_fisher(ds)
    scores = pf.scores.reshape(m * m, -1)
    cov = scores @ scores.T
    eig = np.linalg.eigvalsh(cov)
    res["Fisher covariance PSD"].update(max(0.0, -eig.min()) / max(np.trace(cov), 1e-300))
    res["pairwise Fisher matches bilateral"].update(max(
        abs(pf.log_matrix[j, k] - bl.fisher(bilateral_view(ds, j, k)).log_value)
        for j in range(m) for k in range(m) if j != k))
    b = int(rng.integers(m))
    g = gk.geks_variance(ds, b)
    lg = g.log_indexes
    tr = 0.0
    for j in range(m):
        for k in range(m):
            for l in range(m):
                tr = max(tr, abs((lg[j] - lg[k]) + (lg[k] - lg[l]) - (lg[j] - lg[l])))
    res["GEKS transitivity"].update(tr)
    b2 = int(rng.integers(m))
    g2 = gk.geks_indexes(ds, b2).log_indexes
    res["GEKS base change"].update(float(np.abs((lg[:, None] - lg[None, :])
                                                - (g2[:, None] - g2[None, :])).max()))
    res["GEKS variance nonnegative"].update(max(0.0, -g.var_log.min()))
    oracle = dense_geks_variance(ds, b)
    res["GEKS variance vs dense oracle"].update(geks_oracle_gap(g.var_log, oracle, b))
    if m == 2:
        v = bilateral_view(ds, 1 - b, b)
        res["GEKS two-location degeneracy"].update(max(
            rel_gap(g.log_indexes[1 - b], bl.fisher(v).log_value),
            rel_gap(g.var_log[1 - b], vr.var_log_fisher(v))))


def _new_results():
    spec = [
        ("time reversal", "index(j,k) * index(k,j) = 1", ALGEBRAIC_TOL),
        ("Laspeyres/Paasche reversal", "Laspeyres(j,k) * Paasche(k,j) = 1", ALGEBRAIC_TOL),
        ("Fisher quantity reversal", "Fisher unchanged when quantities swap", ALGEBRAIC_TOL),
        ("identity", "every index is 1 on a self-pair", 1e-14),
        ("proportionality", "proportional prices give the factor", ALGEBRAIC_TOL),
        ("unit invariance", "index unchanged by item unit rescaling", ALGEBRAIC_TOL),
        ("mean value", "min ratio <= index <= max ratio", ALGEBRAIC_TOL),
        ("Fisher variance: composed vs direct", "quarter of VarL+VarInvP-2Cov = sum of squared scores", ALGEBRAIC_TOL),
        ("Fisher level variance ratio", "Var(F) / Var(ln F) = F^2", ALGEBRAIC_TOL),
        ("Fisher variance symmetry", "Var ln F(j,k) = Var ln F(k,j)", ALGEBRAIC_TOL),
        ("Fisher variance quantity reversal", "Var ln F unchanged when quantities swap", ALGEBRAIC_TOL),
        ("variance unit invariance", "all log variances unchanged by unit rescaling", ALGEBRAIC_TOL),
        ("variance nonnegativity", "sums of squares are >= 0", 1e-300),
        ("Cauchy-Schwarz on Laspeyres/Paasche cov", "|cov| <= sqrt(varL varInvP)", ALGEBRAIC_TOL),
        ("Fisher covariance PSD", "score Gram matrix min eigenvalue >= -1e-10 trace", ROUTE_TOL),
        ("pairwise Fisher matches bilateral", "vectorized all-pairs Fisher = bilateral Fisher", ALGEBRAIC_TOL),
        ("GEKS transitivity", "GEKS log differences chain exactly", 1e-13),
        ("GEKS base change", "rebasing shifts all logs by a constant", ALGEBRAIC_TOL),
        ("GEKS variance nonnegative", "quadratic form in a PSD matrix", 1e-300),
        ("GEKS variance vs dense oracle", "score-sum variance = 1'Sigma1/M^2 from entrywise covariances", ROUTE_TOL),
        ("GEKS two-location degeneracy", "M = 2 GEKS equals Fisher in value and variance", ALGEBRAIC_TOL),
        ("measure symmetry", "D_jk = D_kj for D1..D6", ALGEBRAIC_TOL),
        ("contributions sum to measure", "item contributions add up to the measure", ROUTE_TOL),
        ("D4 quantity reversal", "D4 unchanged when quantities swap", ALGEBRAIC_TOL),
        ("D5 quantity reversal", "D5 unchanged when quantities swap (reported)", ALGEBRAIC_TOL),
        ("single-item perturbation", "measures are 0 at t = 0 and positive otherwise", ROUTE_TOL),
        ("LOP route: index", "law-of-one-price solution = index formula", ROUTE_TOL),
        ("LOP route: variance", "law-of-one-price variance = index variance formula", ROUTE_TOL),
        ("LOP moment residual", "moment conditions vanish at the solution", ROUTE_TOL),
    ]
    res = {name: PropertyResult(name, anchor, tol) for name, anchor, tol in spec}
    res["D5 quantity reversal"].enforced = False
    return res


def run_all_properties(seed: int = 0, trials: int = 100, bootstrap: bool = True) -> PropertyReport:
    """Evaluate every invariant over ``trials`` random positive-share instances.

    Also runs Diewert's axiom check for D1..D6 and, if ``bootstrap``, two
    cheap bootstrap contracts (determinism across worker counts and a zero
    SE for a constant statistic).
    """
    report = PropertyReport(seed, trials)
    if trials <= 0:
        return report
    rng = np.random.default_rng(seed)
    res = _new_results()
    for t in range(trials):
        m = 2 if t % 4 == 0 else int(rng.integers(3, 9))
        ds = random_instance(InstanceSpec(int(rng.integers(2, 51)), m,
                                          ShareRegime.POSITIVE_DIRICHLET,
                                          float(rng.uniform(0.05, 1.0)), int(rng.integers(2**31))))
        j, k = rng.choice(ds.n_locations, size=2, replace=False)
        _check_view_properties(bilateral_view(ds, j, k), rng, res)
        _check_dataset_properties(ds, rng, res)
    report.results.extend(res.values())
    gen = instance_generator()
    for mid in dm.MEASURES:
        ax = dm.axiom_check(mid, gen, trials=trials, seed=seed + 1)
        for i, (name, v) in enumerate(zip(dm.AXIOMS, ax.max_violation)):
            r = PropertyResult(f"{mid} axiom {i + 1}: {name}", "dissimilarity axiom", ROUTE_TOL)
            r.checks = trials
            r.max_violation = v
            report.results.append(r)
    if bootstrap:
        report.results.extend(_bootstrap_properties(seed))
    return report


def _bootstrap_properties(seed):
    ds = random_instance(InstanceSpec(20, 3, seed=seed))
    cfg = rs.BootstrapConfig(replications=40, seed=seed, statistic=rs.Statistic(Method.FISHER, 0, 2))
    a = rs.bootstrap_se(ds, cfg, workers=1)
    b = rs.bootstrap_se(ds, cfg, workers=3)
    det = PropertyResult("bootstrap determinism", "same seed, any worker count, same SE", 1e-300)
    det.update(0.0 if np.array_equal(a.replicates, b.replicates, equal_nan=True) else 1.0)
    const_cfg = rs.BootstrapConfig(replications=40, seed=seed,
                                   statistic=rs.Statistic(Method.GEKS, 2, 2))
    zero = PropertyResult("bootstrap of a constant statistic", "SE exactly 0", 1e-300)
    zero.update(rs.bootstrap_se(ds, const_cfg).se_log)
    return [det, zero]
