"""Bootstrap standard errors and Monte Carlo experiments on synthetic data.

Random streams are derived from a master seed and the replicate number
(``SeedSequence(seed, spawn_key=(r,))``), so results do not depend on how
replicates are scheduled across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import geks as gk
from . import variance as vr
from .bilateral import IndexUndefinedError, Method, compute_index
from .data import ComparisonDataset, DatasetError, view_from_arrays

DROP_WARNING_FRACTION = 0.01


@dataclass(frozen=True)
class Statistic:
    """Log index of ``target`` relative to ``base`` under ``method``.

    ``target``/``base`` are location labels or column positions. With
    ``Method.GEKS`` the statistic is the GEKS log index over all locations.
    """

    method: Method = Method.FISHER
    target: Union[str, int] = 0
    base: Union[str, int] = -1
    walsh_negative: str = "error"
    tolerate_zero_shares: bool = False

    def columns(self, dataset: ComparisonDataset) -> tuple[int, int]:
        def col(x):
            if isinstance(x, (int, np.integer)) and x < 0:
                return dataset.n_locations + int(x)
            return dataset.location_index(x)
        return col(self.target), col(self.base)

    def log_value(self, prices: np.ndarray, expend: np.ndarray, j: int, k: int) -> float:
        method = Method.parse(self.method)
        if method is Method.GEKS:
            n, m = prices.shape
            ds = ComparisonDataset([str(i) for i in range(n)], [str(c) for c in range(m)],
                                   prices, expend)
            return gk.geks_indexes(ds, k).log_indexes[j]
        view = view_from_arrays(prices[:, j], prices[:, k], expend[:, j], expend[:, k])
        return compute_index(view, method, walsh_negative=self.walsh_negative,
                             tolerate_zero_shares=self.tolerate_zero_shares).log_value

    def analytic(self, dataset: ComparisonDataset):
        """(log value, SE of the log) from the delta-method formulas."""
        j, k = self.columns(dataset)
        method = Method.parse(self.method)
        if method is Method.GEKS:
            res = gk.geks_variance(dataset, k)
            return float(res.log_indexes[j]), float(math.sqrt(res.var_log[j]))
        view = view_from_arrays(dataset.prices[:, j], dataset.prices[:, k],
                                dataset.expenditures[:, j], dataset.expenditures[:, k],
                                dataset.locations[j], dataset.locations[k])
        est = vr.estimate(view, method, walsh_negative=self.walsh_negative,
                          tolerate_zero_shares=self.tolerate_zero_shares)
        return est.log_value, est.se_log


@dataclass(frozen=True)
class BootstrapConfig:
    replications: int = 2000
    seed: int = 0
    statistic: Statistic = Statistic()

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("bootstrap needs at least 2 replications")


@dataclass(frozen=True)
class BootstrapResult:
    se_log: float
    replications: int
    replicate_count_effective: int
    delta_se_log: float
    log_value: float
    replicates: np.ndarray = field(repr=False)

    @property
    def dropped(self) -> int:
        return self.replications - self.replicate_count_effective

    @property
    def drop_warning(self) -> bool:
        return self.dropped > DROP_WARNING_FRACTION * self.replications


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


def _replicate(dataset, stat, j, k, seed, r):
    idx = replicate_rng(seed, r).integers(0, dataset.n_items, size=dataset.n_items)
    try:
        return stat.log_value(dataset.prices[idx], dataset.expenditures[idx], j, k)
    except (IndexUndefinedError, DatasetError, FloatingPointError):
        return math.nan


def bootstrap_se(dataset: ComparisonDataset, config: BootstrapConfig,
                 workers: int = 1) -> BootstrapResult:
    """Nonparametric bootstrap SE of a log index.

    Each replicate draws N item rows with replacement; prices and
    expenditures of a drawn row move together, so shares are recomputed from
    the resampled expenditures. Replicates where the index is undefined are
    dropped and counted.
    """
    stat = config.statistic
    j, k = stat.columns(dataset)
    log_value, delta_se = stat.analytic(dataset)
    reps = range(config.replications)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            values = list(ex.map(lambda r: _replicate(dataset, stat, j, k, config.seed, r), reps))
    else:
        values = [_replicate(dataset, stat, j, k, config.seed, r) for r in reps]
    values = np.array(values)
    ok = values[np.isfinite(values)]
    if ok.size < 2:
        raise ValueError(f"only {ok.size} bootstrap replicates were computable")
    return BootstrapResult(float(np.std(ok, ddof=1)), config.replications, int(ok.size),
                           float(delta_se), float(log_value), values)


# -- synthetic law-of-one-price data -------------------------------------------

@dataclass(frozen=True)
class ErrorSpec:
    """Log-price disturbances.

    ``sigma`` is a scalar or an N x M array of standard deviations and
    ``correlation`` a common correlation between locations for the same
    item. Alternatively ``covariance`` gives an explicit N x M x M array.
    """

    sigma: Union[float, np.ndarray] = 0.2
    correlation: float = 0.0
    covariance: Optional[np.ndarray] = None

    def covariances(self, n_items: int, n_locations: int) -> np.ndarray:
        if self.covariance is not None:
            cov = np.asarray(self.covariance, dtype=np.float64)
            if cov.shape != (n_items, n_locations, n_locations):
                raise ValueError(f"covariance must have shape {(n_items, n_locations, n_locations)}")
        else:
            sd = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), (n_items, n_locations))
            if np.any(sd < 0):
                raise ValueError("error standard deviations must be nonnegative")
            rho = float(self.correlation)
            corr = np.full((n_locations, n_locations), rho)
            np.fill_diagonal(corr, 1.0)
            cov = sd[:, :, None] * corr[None] * sd[:, None, :]
        if not np.allclose(cov, np.swapaxes(cov, 1, 2)):
            raise ValueError("error covariances must be symmetric")
        low = np.linalg.eigvalsh(cov).min(axis=1)
        scale = np.maximum(1.0, np.abs(cov).max(axis=(1, 2)))
        if np.any(low < -1e-12 * scale):
            n = int(np.argmin(low / scale))
            raise ValueError(f"error covariance for item {n} is not positive semidefinite")
        return cov


@dataclass(frozen=True)
class GeneratorSpec:
    n_items: int = 150
    log_levels: Sequence[float] = (0.5, 0.0)
    errors: ErrorSpec = ErrorSpec()
    item_sd: float = 1.0
    dirichlet_alpha: float = 1.0
    total_expenditure: float = 1000.0


@dataclass(frozen=True)
class SimulatedDataset:
    dataset: ComparisonDataset
    log_levels: np.ndarray
    item_effects: np.ndarray
    metadata: dict

    def true_log_parity(self, j: int, k: int) -> float:
        return float(self.log_levels[j] - self.log_levels[k])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_lop_dataset(n_items: int, locations_spec, error_spec: ErrorSpec = ErrorSpec(),
                         seed=0, *, item_sd: float = 1.0, dirichlet_alpha: float = 1.0,
                         total_expenditure: float = 1000.0) -> SimulatedDataset:
    """Prices from ln p_nj = ln P_j + delta_n + eps_nj with Dirichlet shares.

    ``locations_spec`` is a sequence of true log price levels or a mapping
    from location label to log level. Expenditure shares are drawn
    independently of the price errors.
    """
    if isinstance(locations_spec, dict):
        labels = [str(x) for x in locations_spec]
        levels = np.array([float(v) for v in locations_spec.values()])
    else:
        levels = np.asarray(locations_spec, dtype=np.float64)
        labels = [f"L{c + 1}" for c in range(len(levels))]
    m = len(levels)
    cov = error_spec.covariances(n_items, m)
    rng = _rng(seed)
    delta = rng.normal(scale=item_sd, size=n_items)
    z = rng.standard_normal(size=(n_items, m))
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0.0, None))[:, None, :]
    eps = np.einsum("nij,nj->ni", root, z)
    log_p = levels[None, :] + delta[:, None] + eps
    shares = rng.dirichlet(np.full(n_items, dirichlet_alpha), size=m).T
    # guard against exact-zero shares from underflow at small alpha
    shares = np.maximum(shares, np.finfo(float).tiny)
    shares = shares / shares.sum(axis=0)
    ds = ComparisonDataset([f"item{n + 1}" for n in range(n_items)], labels,
                           np.exp(log_p), shares * total_expenditure)
    meta = {"expenditure_model": f"dirichlet(alpha={dirichlet_alpha}) independent of errors",
            "item_sd": item_sd}
    return SimulatedDataset(ds, levels, delta, meta)


def simulate(spec: GeneratorSpec, seed) -> SimulatedDataset:
    return generate_lop_dataset(spec.n_items, spec.log_levels, spec.errors, seed,
                                item_sd=spec.item_sd, dirichlet_alpha=spec.dirichlet_alpha,
                                total_expenditure=spec.total_expenditure)


@dataclass(frozen=True)
class CoverageReport:
    method: Method
    replications: int
    coverage: float
    mean_se: float
    empirical_sd: float
    mean_error: float
    estimates: np.ndarray = field(repr=False)
    ses: np.ndarray = field(repr=False)


CRITICAL_VALUE = 1.96


def coverage_experiment(generator_spec: GeneratorSpec, index_method, replications: int,
                        seed: int = 0, pair=(0, 1), workers: int = 1) -> CoverageReport:
    """Share of replications whose log estimate +- 1.96 SE covers the true log parity."""
    method = Method.parse(index_method)
    stat = Statistic(method, pair[0], pair[1])

    def one(r):
        sim = simulate(generator_spec, np.random.SeedSequence(seed, spawn_key=(r,)))
        est, se = stat.analytic(sim.dataset)
        return est - sim.true_log_parity(*pair), se

    reps = range(replications)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(one, reps))
    else:
        out = [one(r) for r in reps]
    err = np.array([o[0] for o in out])
    se = np.array([o[1] for o in out])
    # rounding slack so noiseless intervals of zero width still count as covering
    covered = np.abs(err) <= CRITICAL_VALUE * se + 1e-12
    return CoverageReport(method, replications, float(covered.mean()), float(se.mean()),
                          float(err.std(ddof=1)) if replications > 1 else 0.0,
                          float(err.mean()), err, se)
