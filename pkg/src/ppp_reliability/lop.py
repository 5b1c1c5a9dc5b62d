"""Law-of-one-price estimators of bilateral parities.

Prices are modelled as p_nj = P_j * alpha_n * (1 + eps_nj) with the base
location's level fixed at one. Weighting the moment conditions by base,
current or geometric-mean quantities reproduces Laspeyres, Paasche and
Walsh; weighted least squares on the log form reproduces the product dummy,
Törnqvist and Sato-Vartia indexes. These solvers do not call the index
formulas, so they serve as a second route to the same numbers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bilateral import IndexUndefinedError, Method, logarithmic_mean
from .data import BilateralView


class LevelWeighting(str, enum.Enum):
    BASE_QUANTITY = "base"          # Laspeyres
    CURRENT_QUANTITY = "current"    # Paasche
    GEOMETRIC_QUANTITY = "geometric"  # Walsh


class LogWeighting(str, enum.Enum):
    PRODUCT_DUMMY = "pd"
    TORNQVIST = "tornqvist"
    SATO_VARTIA = "sv"


EQUIVALENT_METHOD = {
    LevelWeighting.BASE_QUANTITY: Method.LASPEYRES,
    LevelWeighting.CURRENT_QUANTITY: Method.PAASCHE,
    LevelWeighting.GEOMETRIC_QUANTITY: Method.WALSH,
    LogWeighting.PRODUCT_DUMMY: Method.PRODUCT_DUMMY,
    LogWeighting.TORNQVIST: Method.TORNQVIST,
    LogWeighting.SATO_VARTIA: Method.SATO_VARTIA,
}


@dataclass(frozen=True)
class LopSolution:
    """Fitted law-of-one-price model for one bilateral comparison.

    ``item_effects`` holds alpha_n for the level form and delta_n for the log
    form. ``residuals`` stacks the N residuals of location j over the N of
    the base. ``weights`` are the moment weights w_n (level form) or the
    implied index weights (log form).
    """

    parity: float
    log_parity: float
    item_effects: np.ndarray
    weighting: object
    residuals: np.ndarray
    weights: np.ndarray
    iterations: int = 0

    @property
    def method(self) -> Method:
        return EQUIVALENT_METHOD[self.weighting]


def _level_weights(view: BilateralView, weighting: LevelWeighting) -> np.ndarray:
    qj, qk = view.quantities_j, view.quantities_k
    if weighting is LevelWeighting.BASE_QUANTITY:
        w = qk
    elif weighting is LevelWeighting.CURRENT_QUANTITY:
        w = qj
    else:
        prod = qj * qk
        if np.any(prod < 0):
            n = int(np.flatnonzero(prod < 0)[0])
            raise IndexUndefinedError(f"geometric quantity weight undefined for item {n}")
        w = np.sqrt(prod)
    total = w.sum()
    if total == 0:
        raise IndexUndefinedError("moment weights sum to zero")
    return w / total


def _item_effects(view, parity):
    return view.prices_j / (2.0 * parity) + view.prices_k / 2.0


def solve_lop_level(view: BilateralView, weighting, *, tol: float = 1e-14,
                    max_iter: int = 500, damping: float = 1.0) -> LopSolution:
    """Solve the quantity-weighted moment conditions for P_jk and alpha.

    The per-item conditions give alpha_n = p_nj / (2P) + p_nk / 2; the pooled
    condition then gives 1/P = sum w alpha / sum w p_j. For base and current
    quantities the pair is solved by substitution; for geometric quantities
    it is iterated to a fixed point (the map contracts at rate 1/2).
    """
    weighting = LevelWeighting(weighting)
    w = _level_weights(view, weighting)
    pj, pk = view.prices_j, view.prices_k
    a = float(np.dot(w, pj))
    iterations = 0
    if weighting is LevelWeighting.GEOMETRIC_QUANTITY:
        parity = a / float(np.dot(w, 0.5 * (pj + pk)))
        for iterations in range(1, max_iter + 1):
            alpha = _item_effects(view, parity)
            new = a / float(np.dot(w, alpha))
            new = (1.0 - damping) * parity + damping * new
            done = abs(new - parity) <= max(tol, 4 * np.finfo(float).eps) * abs(parity)
            parity = new
            if done:
                break
        else:
            raise RuntimeError(f"fixed point did not converge in {max_iter} iterations")
    else:
        b = float(np.dot(w, pk))
        if not (a > 0 and b > 0):
            raise IndexUndefinedError("nonpositive quantity-weighted price aggregate")
        parity = a / b
    if not parity > 0:
        raise IndexUndefinedError(f"nonpositive parity {parity}")
    alpha = _item_effects(view, parity)
    resid = np.concatenate([pj / (parity * alpha) - 1.0, pk / alpha - 1.0])
    return LopSolution(parity, math.log(parity), alpha, weighting, resid, w, iterations)


def level_moment_residual(solution: LopSolution, view: BilateralView) -> np.ndarray:
    """R'Wr at the solution: one pooled condition plus one per item."""
    n = view.n_items
    w, alpha, p = solution.weights, solution.item_effects, solution.parity
    ej, ek = solution.residuals[:n], solution.residuals[n:]
    pooled = np.sum(-alpha / p * w * ej)
    per_item = w * (-1.0 / alpha) * ej + w * (-1.0 / alpha) * ek
    return np.concatenate([[pooled], per_item])


def lop_variance_log(solution: LopSolution, view: BilateralView) -> float:
    """Plug-in variance of ln P from the quantity-weighted price sums.

    Uses sigma_nj^2 = eps_nj^2, sigma_nk^2 = eps_nk^2 and
    sigma_n,jk = eps_nj * eps_nk in the delta-method expansion of
    ln(sum w p_j) - ln(sum w p_k).
    """
    if not isinstance(solution.weighting, LevelWeighting):
        raise TypeError("lop_variance_log expects a level-form solution")
    n = view.n_items
    w, alpha, p = solution.weights, solution.item_effects, solution.parity
    ej, ek = solution.residuals[:n], solution.residuals[n:]
    a = float(np.dot(w, view.prices_j))
    b = float(np.dot(w, view.prices_k))
    t = w * (p * alpha * ej / a - alpha * ek / b)
    return float(np.dot(t, t))


def _log_item_weights(view: BilateralView, choice: LogWeighting):
    sj, sk = view.shares_j, view.shares_k
    if choice is LogWeighting.TORNQVIST:
        psi = 0.5 * (sj + sk)
        return psi, psi
    if np.any(sj <= 0) or np.any(sk <= 0):
        n = int(np.flatnonzero((sj <= 0) | (sk <= 0))[0])
        raise IndexUndefinedError(f"{choice.value} weights need positive shares (item {n})")
    if choice is LogWeighting.PRODUCT_DUMMY:
        return sj, sk
    psi = logarithmic_mean(sj, sk)
    psi = psi / psi.sum()
    return psi, psi


def solve_lop_log(view: BilateralView, weight_choice) -> LopSolution:
    """Weighted least squares fit of ln p_nj = ln P + delta_n + e, ln p_nk = delta_n + e.

    Solved as a generic 2N x (N+1) weighted regression. The implied index
    weights are the row of the hat matrix that maps ln p_nj into ln P.
    """
    choice = LogWeighting(weight_choice)
    psi_j, psi_k = _log_item_weights(view, choice)
    n = view.n_items
    x = np.zeros((2 * n, n + 1))
    x[:n, 0] = 1.0
    x[np.arange(n), 1 + np.arange(n)] = 1.0
    x[n + np.arange(n), 1 + np.arange(n)] = 1.0
    y = np.concatenate([np.log(view.prices_j), np.log(view.prices_k)])
    psi = np.concatenate([psi_j, psi_k])
    if np.any(psi < 0):
        raise IndexUndefinedError("negative regression weights")
    root = np.sqrt(psi)
    xw = x * root[:, None]
    # hat rows: (X'WX)^{-1} X'W, via least squares on the weighted design
    proj, *_ = np.linalg.lstsq(xw, np.diag(root), rcond=None)
    coef = proj @ y
    log_p, delta = float(coef[0]), coef[1:]
    resid = y - x @ coef
    index_weights = proj[0, :n]
    return LopSolution(math.exp(log_p), log_p, delta, choice, resid, index_weights)


def lop_log_variance(solution: LopSolution, view: Optional[BilateralView] = None) -> float:
    """sum_n w_n^2 (eps_nj - eps_nk)^2 with the implied index weights."""
    if not isinstance(solution.weighting, LogWeighting):
        raise TypeError("lop_log_variance expects a log-form solution")
    n = len(solution.weights)
    d = solution.residuals[:n] - solution.residuals[n:]
    t = solution.weights * d
    return float(np.dot(t, t))


def log_moment_residual(solution: LopSolution, view: BilateralView) -> np.ndarray:
    """Normal equations X'W e of the log regression at the solution."""
    psi_j, psi_k = _log_item_weights(view, LogWeighting(solution.weighting))
    n = view.n_items
    ej, ek = solution.residuals[:n], solution.residuals[n:]
    return np.concatenate([[np.dot(psi_j, ej)], psi_j * ej + psi_k * ek])
