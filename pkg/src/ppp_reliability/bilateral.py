"""Bilateral price index formulas.

All functions take a :class:`~ppp_reliability.data.BilateralView` comparing
location ``j`` with base ``k`` and return an :class:`IndexEstimate` whose
variance slot is empty; :mod:`ppp_reliability.variance` fills it.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import BilateralView


class IndexUndefinedError(ValueError):
    """The requested index has no valid value for this comparison."""


class Method(str, enum.Enum):
    LASPEYRES = "laspeyres"
    PAASCHE = "paasche"
    FISHER = "fisher"
    TORNQVIST = "tornqvist"
    SATO_VARTIA = "sato_vartia"
    PRODUCT_DUMMY = "product_dummy"
    WALSH = "walsh"
    GEKS = "geks"

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown index method {name!r}") from None


_ALIASES = {
    "sv": "sato_vartia", "satovartia": "sato_vartia",
    "pd": "product_dummy", "cpd": "product_dummy", "productdummy": "product_dummy",
    "tornqvist_theil": "tornqvist", "törnqvist": "tornqvist",
    "lasp": "laspeyres", "paas": "paasche",
}

BILATERAL_METHODS = (Method.LASPEYRES, Method.PAASCHE, Method.FISHER, Method.TORNQVIST,
                     Method.SATO_VARTIA, Method.PRODUCT_DUMMY, Method.WALSH)


class WeightKind(str, enum.Enum):
    ARITHMETIC = "arithmetic"
    LOGARITHMIC = "logarithmic"
    HARMONIC = "harmonic"


SCHEME_METHOD = {
    WeightKind.ARITHMETIC: Method.TORNQVIST,
    WeightKind.LOGARITHMIC: Method.SATO_VARTIA,
    WeightKind.HARMONIC: Method.PRODUCT_DUMMY,
}
METHOD_SCHEME = {m: k for k, m in SCHEME_METHOD.items()}


@dataclass(frozen=True)
class IndexEstimate:
    method: Method
    value: float
    log_value: float
    var_log: Optional[float] = None
    base: str = ""
    target: str = ""

    @property
    def se_log(self) -> Optional[float]:
        return None if self.var_log is None else math.sqrt(self.var_log)

    def with_variance(self, var_log: float) -> "IndexEstimate":
        return replace(self, var_log=float(var_log))


@dataclass(frozen=True)
class WeightScheme:
    kind: WeightKind
    weights: np.ndarray


@dataclass(frozen=True)
class WalshDecomposition:
    p_a: float
    p_b: float
    weights: np.ndarray


def _estimate(method, view, log_value):
    return IndexEstimate(method, math.exp(log_value), float(log_value),
                         base=view.k, target=view.j)


def laspeyres_aggregate(view: BilateralView) -> float:
    return float(np.dot(view.shares_k, view.price_ratio))


def inverse_paasche_aggregate(view: BilateralView) -> float:
    """sum_n s_nj / pi_n, the reciprocal of the Paasche index."""
    return float(np.dot(view.shares_j, 1.0 / view.price_ratio))


def laspeyres(view: BilateralView) -> IndexEstimate:
    agg = laspeyres_aggregate(view)
    if not agg > 0:
        raise IndexUndefinedError(
            f"Laspeyres undefined: nonpositive aggregate {agg} for ({view.j},{view.k})")
    return _estimate(Method.LASPEYRES, view, math.log(agg))


def paasche(view: BilateralView) -> IndexEstimate:
    agg = inverse_paasche_aggregate(view)
    if not agg > 0:
        raise IndexUndefinedError(
            f"Paasche undefined: nonpositive harmonic aggregate {agg} for ({view.j},{view.k})")
    return _estimate(Method.PAASCHE, view, -math.log(agg))


def fisher(view: BilateralView) -> IndexEstimate:
    lo = 0.5 * (laspeyres(view).log_value + paasche(view).log_value)
    return _estimate(Method.FISHER, view, lo)


def logarithmic_mean(a, b) -> np.ndarray:
    """Elementwise L(a, b) = (a - b) / (ln a - ln b), with L(a, a) = a.

    Zero arguments give 0 (the limit); negative arguments are not accepted.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_to(a, out.shape), np.broadcast_to(b, out.shape)
    pos = (a > 0) & (b > 0)
    la, lb = np.log(a[pos]), np.log(b[pos])
    d = la - lb
    near = np.abs(d) < 1e-12
    vals = np.where(near, a[pos], (a[pos] - b[pos]) / np.where(near, 1.0, d))
    out[pos] = vals
    return out


def harmonic_mean(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, 2.0 * a * b / np.where(s > 0, s, 1.0), 0.0)


def _check_positive_shares(view, kind, tolerate_zero):
    for name, s in (("j", view.shares_j), ("k", view.shares_k)):
        bad = np.flatnonzero(s < 0) if tolerate_zero else np.flatnonzero(s <= 0)
        if bad.size:
            n = int(bad[0])
            loc = view.j if name == "j" else view.k
            raise IndexUndefinedError(
                f"{kind.value} weights need positive shares: item {n} has share "
                f"{s[n]!r} in location {loc}")


def weight_scheme(view: BilateralView, kind, tolerate_zero: bool = False) -> WeightScheme:
    """Normalized weights built from the two share vectors.

    Arithmetic averages the shares (Törnqvist), logarithmic uses their
    logarithmic mean (Sato-Vartia), harmonic their harmonic mean (bilateral
    product dummy). The last two need strictly positive shares unless
    ``tolerate_zero`` is set, in which case a zero share zeroes the weight.
    """
    kind = WeightKind(kind)
    sj, sk = view.shares_j, view.shares_k
    if kind is WeightKind.ARITHMETIC:
        raw = 0.5 * (sj + sk)
    else:
        _check_positive_shares(view, kind, tolerate_zero)
        raw = logarithmic_mean(sj, sk) if kind is WeightKind.LOGARITHMIC else harmonic_mean(sj, sk)
    total = raw.sum()
    if total == 0:
        raise IndexUndefinedError(f"{kind.value} weights sum to zero for ({view.j},{view.k})")
    return WeightScheme(kind, raw / total)


def log_weighted_index(view: BilateralView, scheme: WeightScheme) -> IndexEstimate:
    """ln P = sum_n w_n ln(pi_n) for a normalized weight scheme."""
    if len(scheme.weights) != view.n_items:
        raise ValueError("weight scheme does not match the view's items")
    lo = float(np.dot(scheme.weights, np.log(view.price_ratio)))
    return _estimate(SCHEME_METHOD[scheme.kind], view, lo)


def walsh_weights(view: BilateralView, negative_policy: str = "error") -> np.ndarray:
    prod = view.shares_j * view.shares_k
    neg = np.flatnonzero(prod < 0)
    if neg.size:
        if negative_policy == "error":
            n = int(neg[0])
            raise IndexUndefinedError(
                f"Walsh undefined for ({view.j},{view.k}): item {n} has shares of "
                f"opposite sign ({view.shares_j[n]!r}, {view.shares_k[n]!r})")
        if negative_policy != "drop":
            raise ValueError(f"unknown Walsh negative-share policy {negative_policy!r}")
        warnings.warn(f"Walsh ({view.j},{view.k}): dropped {neg.size} item(s) with "
                      f"opposite-sign shares", RuntimeWarning, stacklevel=3)
        prod = np.where(prod < 0, 0.0, prod)
    root = np.sqrt(prod)
    total = root.sum()
    if total == 0:
        raise IndexUndefinedError(f"Walsh undefined for ({view.j},{view.k}): no common weight")
    return root / total


def walsh(view: BilateralView, negative_policy: str = "error"):
    """Walsh index as the ratio P^a / P^b of two weighted square-root means.

    Returns the estimate together with its :class:`WalshDecomposition`.
    """
    w = walsh_weights(view, negative_policy)
    root = np.sqrt(view.price_ratio)
    p_a = float(np.dot(w, root))
    p_b = float(np.dot(w, 1.0 / root))
    est = _estimate(Method.WALSH, view, math.log(p_a) - math.log(p_b))
    return est, WalshDecomposition(p_a, p_b, w)


def compute_index(view: BilateralView, method, *, walsh_negative: str = "error",
                  tolerate_zero_shares: bool = False) -> IndexEstimate:
    """Dispatch to the formula for ``method`` (any bilateral method)."""
    method = Method.parse(method)
    if method is Method.LASPEYRES:
        return laspeyres(view)
    if method is Method.PAASCHE:
        return paasche(view)
    if method is Method.FISHER:
        return fisher(view)
    if method is Method.WALSH:
        return walsh(view, walsh_negative)[0]
    if method in METHOD_SCHEME:
        scheme = weight_scheme(view, METHOD_SCHEME[method], tolerate_zero_shares)
        return log_weighted_index(view, scheme)
    raise ValueError(f"{method.value} is not a bilateral method")
