"""GEKS multilateral index and its delta-method variance.

The GEKS log index of location j against base b averages the Fisher chain
through every location l:  ln G_jb = mean_l (ln F_jl + ln F_lb).  Its variance
is the squared norm of the correspondingly summed Fisher score vectors,
divided by M^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bilateral import IndexUndefinedError
from .data import ComparisonDataset


@dataclass(frozen=True)
class PairwiseFisher:
    """Log Fisher indexes and score vectors for every ordered pair.

    ``log_matrix[j, k]`` is ln P^F of j relative to base k and
    ``scores[j, k]`` its length-N score vector. Both are antisymmetric in
    (j, k) by construction; the diagonal is zero.
    """

    log_matrix: np.ndarray
    scores: np.ndarray

    def var_log(self) -> np.ndarray:
        return np.einsum("jkn,jkn->jk", self.scores, self.scores)


@dataclass(frozen=True)
class GeksResult:
    base: str
    locations: tuple
    log_indexes: np.ndarray
    fisher_log_matrix: np.ndarray
    residuals: np.ndarray
    var_log: Optional[np.ndarray] = None

    @property
    def indexes(self) -> np.ndarray:
        return np.exp(self.log_indexes)

    @property
    def se_log(self) -> Optional[np.ndarray]:
        return None if self.var_log is None else np.sqrt(self.var_log)

    def log_index(self, j, k) -> float:
        """Transitive ln P^G of location j relative to location k."""
        lj = self.locations.index(str(j))
        lk = self.locations.index(str(k))
        return float(self.log_indexes[lj] - self.log_indexes[lk])


def pairwise_fisher(dataset: ComparisonDataset) -> PairwiseFisher:
    """Fisher log indexes and scores over all pairs, upper triangle mirrored."""
    p = dataset.prices
    s = dataset.share_matrix()
    n_items, m = p.shape
    log_f = np.zeros((m, m))
    scores = np.zeros((m, m, n_items))
    for j in range(m - 1):
        ks = np.arange(j + 1, m)
        ratio = p[:, [j]] / p[:, ks]                    # N x len(ks)
        sj, sk = s[:, [j]], s[:, ks]
        lasp = np.einsum("nk,nk->k", sk, ratio)
        inv_paasche = np.einsum("nk,nk->k", np.broadcast_to(sj, ratio.shape), 1.0 / ratio)
        for idx, k in enumerate(ks):
            if not (lasp[idx] > 0 and inv_paasche[idx] > 0):
                raise IndexUndefinedError(
                    f"Fisher undefined for pair ({dataset.locations[j]},"
                    f"{dataset.locations[k]}): nonpositive Laspeyres or Paasche aggregate")
        pas = 1.0 / inv_paasche
        u = 0.5 * (sk * (ratio / lasp - 1.0) - sj * (pas / ratio - 1.0))
        lf = 0.5 * (np.log(lasp) - np.log(inv_paasche))
        log_f[j, ks] = lf
        log_f[ks, j] = -lf
        scores[j, ks] = u.T
        scores[ks, j] = -u.T
    return PairwiseFisher(log_f, scores)


def _geks_from_pairs(pf: PairwiseFisher, b: int):
    m = pf.log_matrix.shape[0]
    lf = pf.log_matrix
    log_g = (lf.sum(axis=1) + lf[:, b].sum()) / m
    # rebase exactly: the formula already gives ln G_bb = 0 up to rounding
    log_g = log_g - log_g[b]
    resid = lf - (log_g[:, None] - log_g[None, :])
    return log_g, resid


def geks_indexes(dataset: ComparisonDataset, base=None, pairs: Optional[PairwiseFisher] = None) -> GeksResult:
    """GEKS log indexes of every location relative to ``base`` (default: last)."""
    b = dataset.n_locations - 1 if base is None else dataset.location_index(base)
    pf = pairwise_fisher(dataset) if pairs is None else pairs
    log_g, resid = _geks_from_pairs(pf, b)
    return GeksResult(dataset.locations[b], dataset.locations, log_g, pf.log_matrix, resid)


def geks_score_sums(pf: PairwiseFisher, b: int) -> np.ndarray:
    """M x N matrix; row j sums the score vectors of the 2M stacked Fishers."""
    return pf.scores.sum(axis=1) + pf.scores[:, b, :].sum(axis=0)[None, :]


def geks_variance(dataset: ComparisonDataset, base=None, pairs: Optional[PairwiseFisher] = None) -> GeksResult:
    b = dataset.n_locations - 1 if base is None else dataset.location_index(base)
    pf = pairwise_fisher(dataset) if pairs is None else pairs
    res = geks_indexes(dataset, b, pf)
    m = dataset.n_locations
    g = geks_score_sums(pf, b)
    var = np.einsum("jn,jn->j", g, g) / m**2
    var[b] = 0.0
    return GeksResult(res.base, res.locations, res.log_indexes, res.fisher_log_matrix,
                      res.residuals, var)


@dataclass(frozen=True)
class GapRow:
    location: str
    log_geks: float
    se_log_geks: float
    log_fisher: float
    se_log_fisher: float

    @property
    def gap_pct(self) -> float:
        return 100.0 * (self.log_geks - self.log_fisher)

    @property
    def se_ratio(self) -> float:
        return self.se_log_geks / self.se_log_fisher if self.se_log_fisher > 0 else float("nan")


def geks_fisher_gap_report(dataset: ComparisonDataset, base=None) -> list[GapRow]:
    """Per-location comparison of GEKS with the bilateral Fisher against the base."""
    b = dataset.n_locations - 1 if base is None else dataset.location_index(base)
    pf = pairwise_fisher(dataset)
    res = geks_variance(dataset, b, pf)
    fvar = pf.var_log()[:, b]
    rows = []
    for j, loc in enumerate(dataset.locations):
        rows.append(GapRow(loc, float(res.log_indexes[j]), float(np.sqrt(res.var_log[j])),
                           float(pf.log_matrix[j, b]), float(np.sqrt(fvar[j]))))
    return rows
