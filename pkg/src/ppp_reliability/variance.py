"""Delta-method variances of log price indexes.

Each variance is a plain sum of squared per-item terms (no small-sample
correction). The log-Fisher terms are exposed as score vectors, whose inner
products give covariances between Fisher indexes of different pairs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bilateral as bl
from .bilateral import IndexEstimate, Method, WeightScheme
from .data import BilateralView


@dataclass(frozen=True)
class LPVarianceBundle:
    var_log_laspeyres: float
    var_log_inv_paasche: float
    cov_log: float

    def fisher_variance(self) -> float:
        """Var(ln P^F) composed from the Laspeyres/Paasche parts."""
        return 0.25 * (self.var_log_laspeyres + self.var_log_inv_paasche - 2.0 * self.cov_log)


@dataclass(frozen=True)
class FisherScoreVector:
    pair: tuple
    scores: np.ndarray

    @property
    def variance(self) -> float:
        return float(np.dot(self.scores, self.scores))


def _lp_terms(view: BilateralView):
    """Per-item log-Laspeyres and log-inverse-Paasche linearization terms."""
    p_l = bl.laspeyres(view).value
    p_p = bl.paasche(view).value
    sigma = view.shares_k * (view.price_ratio / p_l - 1.0)
    tau = view.shares_j * (p_p / view.price_ratio - 1.0)
    return sigma, tau


def lp_variance_bundle(view: BilateralView) -> LPVarianceBundle:
    sigma, tau = _lp_terms(view)
    return LPVarianceBundle(float(np.dot(sigma, sigma)), float(np.dot(tau, tau)),
                            float(np.dot(sigma, tau)))


def fisher_scores(view: BilateralView) -> FisherScoreVector:
    """u_n = (sigma_n - tau_n) / 2; their squares sum to Var(ln P^F)."""
    sigma, tau = _lp_terms(view)
    return FisherScoreVector((view.j, view.k), 0.5 * (sigma - tau))


def var_log_fisher(view: BilateralView) -> float:
    return fisher_scores(view).variance


def var_fisher_level(view: BilateralView) -> float:
    """Variance of the Fisher level itself, Var(ln P^F) * (P^F)^2."""
    return var_log_fisher(view) * bl.fisher(view).value ** 2


def cov_log_fisher(view_jk: BilateralView, view_lm: BilateralView) -> float:
    if view_jk.n_items != view_lm.n_items:
        raise ValueError("views cover different item sets")
    return float(np.dot(fisher_scores(view_jk).scores, fisher_scores(view_lm).scores))


def log_weighted_terms(view: BilateralView, scheme: WeightScheme) -> np.ndarray:
    log_p = bl.log_weighted_index(view, scheme).log_value
    return scheme.weights * (np.log(view.price_ratio) - log_p)


def var_log_weighted(view: BilateralView, scheme: WeightScheme) -> float:
    """sum_n w_n^2 (ln pi_n - ln P)^2 for Törnqvist, Sato-Vartia or PD weights."""
    t = log_weighted_terms(view, scheme)
    return float(np.dot(t, t))


def walsh_terms(view: BilateralView, negative_policy: str = "error") -> np.ndarray:
    _, dec = bl.walsh(view, negative_policy)
    root = np.sqrt(view.price_ratio)
    return dec.weights * (root / dec.p_a - 1.0 / (root * dec.p_b))


def var_log_walsh(view: BilateralView, negative_policy: str = "error") -> float:
    t = walsh_terms(view, negative_policy)
    return float(np.dot(t, t))


def estimate(view: BilateralView, method, *, walsh_negative: str = "error",
             tolerate_zero_shares: bool = False) -> IndexEstimate:
    """Index value together with the variance of its logarithm.

    Laspeyres and Paasche carry their own log variances (the Paasche one is
    that of ln(1/P^P), which is the same number).
    """
    method = Method.parse(method)
    est = bl.compute_index(view, method, walsh_negative=walsh_negative,
                           tolerate_zero_shares=tolerate_zero_shares)
    if method is Method.FISHER:
        v = var_log_fisher(view)
    elif method is Method.LASPEYRES:
        v = lp_variance_bundle(view).var_log_laspeyres
    elif method is Method.PAASCHE:
        v = lp_variance_bundle(view).var_log_inv_paasche
    elif method is Method.WALSH:
        v = var_log_walsh(view, walsh_negative)
    else:
        scheme = bl.weight_scheme(view, bl.METHOD_SCHEME[method], tolerate_zero_shares)
        v = var_log_weighted(view, scheme)
    return est.with_variance(v)
