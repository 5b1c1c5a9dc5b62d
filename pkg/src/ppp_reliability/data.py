"""Comparison datasets: an items x locations matrix of prices plus expenditures.

Every index, variance and dissimilarity routine works on a
:class:`BilateralView`, the (j, k) slice of a :class:`ComparisonDataset`.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when input data violates a dataset invariant."""


@dataclass(frozen=True)
class ShareVector:
    location: str
    shares: np.ndarray


@dataclass(frozen=True)
class ComparisonDataset:
    """Prices and expenditures for N items in M locations.

    ``prices[n, j]`` is the price of item n in location j and
    ``expenditures[n, j]`` the spending on it. Quantities are implied as
    expenditure / price. The arrays are copied and made read-only on
    construction.
    """

    items: tuple
    locations: tuple
    prices: np.ndarray
    expenditures: np.ndarray
    _loc_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = tuple(str(i) for i in self.items)
        locations = tuple(str(c) for c in self.locations)
        prices = np.array(self.prices, dtype=np.float64)
        expend = np.array(self.expenditures, dtype=np.float64)
        _validate(items, locations, prices, expend)
        prices.setflags(write=False)
        expend.setflags(write=False)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "expenditures", expend)
        object.__setattr__(self, "_loc_index", {c: i for i, c in enumerate(locations)})

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    @property
    def quantities(self) -> np.ndarray:
        return self.expenditures / self.prices

    def location_index(self, location) -> int:
        """Column index of ``location``; integers are accepted as positions."""
        if isinstance(location, (int, np.integer)) and not isinstance(location, bool):
            if not 0 <= location < self.n_locations:
                raise DatasetError(f"unknown location index {location}")
            return int(location)
        try:
            return self._loc_index[str(location)]
        except KeyError:
            raise DatasetError(f"unknown location {location!r}") from None

    def share_matrix(self) -> np.ndarray:
        """N x M matrix of expenditure shares, one column per location."""
        totals = self.expenditures.sum(axis=0)
        return self.expenditures / totals

    def take_items(self, index) -> "ComparisonDataset":
        """Dataset restricted to (or resampled at) the given item rows."""
        index = np.asarray(index)
        items = [f"{self.items[i]}#{r}" for r, i in enumerate(index)]
        return ComparisonDataset(items, self.locations,
                                 self.prices[index], self.expenditures[index])


def _validate(items, locations, prices, expend):
    if prices.ndim != 2 or expend.ndim != 2:
        raise DatasetError("prices and expenditures must be 2-D matrices")
    if prices.shape != expend.shape:
        raise DatasetError(
            f"dimension mismatch: prices {prices.shape} vs expenditures {expend.shape}")
    n, m = prices.shape
    if (len(items), len(locations)) != (n, m):
        raise DatasetError(
            f"dimension mismatch: {len(items)} item labels and {len(locations)} "
            f"location labels for a {n}x{m} matrix")
    if n < 2 or m < 2:
        raise DatasetError(f"need at least 2 items and 2 locations, got {n}x{m}")
    for kind, labels in (("item", items), ("location", locations)):
        if len(set(labels)) != len(labels):
            dup = next(x for x in labels if labels.count(x) > 1)
            raise DatasetError(f"duplicate {kind} label {dup!r}")
    for name, arr in (("price", prices), ("expenditure", expend)):
        bad = np.argwhere(np.isnan(arr))
        if bad.size:
            r, c = bad[0]
            raise DatasetError(f"missing {name} at ({items[r]},{locations[c]})")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise DatasetError(f"nonfinite {name} at ({items[r]},{locations[c]})")
    bad = np.argwhere(prices <= 0)
    if bad.size:
        r, c = bad[0]
        raise DatasetError(f"nonpositive price at ({items[r]},{locations[c]})")
    totals = expend.sum(axis=0)
    zero = np.flatnonzero(totals == 0)
    if zero.size:
        raise DatasetError(f"zero total expenditure in location {locations[zero[0]]}")


def shares(dataset: ComparisonDataset, location) -> ShareVector:
    """Expenditure shares s_n = e_n / sum(e) for one location."""
    col = dataset.location_index(location)
    e = dataset.expenditures[:, col]
    total = e.sum()
    if total == 0:
        raise DatasetError(f"zero total expenditure in location {dataset.locations[col]}")
    return ShareVector(dataset.locations[col], e / total)


@dataclass(frozen=True)
class BilateralView:
    """Inputs of a bilateral comparison of location ``j`` against base ``k``.

    Attributes
    ----------
    price_ratio : ndarray
        p_nj / p_nk for each item.
    shares_j, shares_k : ndarray
        Expenditure shares in the compared and in the base location.
    """

    j: str
    k: str
    price_ratio: np.ndarray
    shares_j: np.ndarray
    shares_k: np.ndarray
    prices_j: np.ndarray
    prices_k: np.ndarray
    expenditures_j: np.ndarray
    expenditures_k: np.ndarray

    @property
    def n_items(self) -> int:
        return len(self.price_ratio)

    @property
    def quantities_j(self) -> np.ndarray:
        return self.expenditures_j / self.prices_j

    @property
    def quantities_k(self) -> np.ndarray:
        return self.expenditures_k / self.prices_k

    def reversed(self) -> "BilateralView":
        return view_from_arrays(self.prices_k, self.prices_j, self.expenditures_k,
                                self.expenditures_j, j=self.k, k=self.j)


def view_from_arrays(prices_j, prices_k, expenditures_j, expenditures_k,
                     j="j", k="k") -> BilateralView:
    """Build a view straight from price and expenditure vectors."""
    pj = np.asarray(prices_j, dtype=np.float64)
    pk = np.asarray(prices_k, dtype=np.float64)
    ej = np.asarray(expenditures_j, dtype=np.float64)
    ek = np.asarray(expenditures_k, dtype=np.float64)
    if not (pj.shape == pk.shape == ej.shape == ek.shape) or pj.ndim != 1:
        raise DatasetError("bilateral inputs must be equal-length vectors")
    ratio = pj / pk
    if not np.all(np.isfinite(ratio)) or np.any(ratio <= 0):
        raise DatasetError("price ratios must be positive and finite")
    tj, tk = ej.sum(), ek.sum()
    if tj == 0 or tk == 0:
        raise DatasetError("zero total expenditure")
    return BilateralView(str(j), str(k), ratio, ej / tj, ek / tk, pj, pk, ej, ek)


def bilateral_view(dataset: ComparisonDataset, j, k) -> BilateralView:
    """Comparison of location ``j`` relative to base location ``k``."""
    cj = dataset.location_index(j)
    ck = dataset.location_index(k)
    return view_from_arrays(dataset.prices[:, cj], dataset.prices[:, ck],
                            dataset.expenditures[:, cj], dataset.expenditures[:, ck],
                            j=dataset.locations[cj], k=dataset.locations[ck])


# -- CSV ---------------------------------------------------------------------

def _read_matrix(source, what):
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if r]
    if not rows:
        raise DatasetError(f"{what} file is empty")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DatasetError(f"{what} header needs an item column and locations")
    locations = header[1:]
    items, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(
                f"dimension mismatch in {what} line {lineno}: "
                f"expected {len(header)} fields, got {len(row)}")
        item = row[0].strip()
        items.append(item)
        parsed = []
        for loc, cell in zip(locations, row[1:]):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                raise DatasetError(f"missing {what} cell at ({item},{loc})")
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DatasetError(f"unparseable {what} cell {cell!r} at ({item},{loc})") from None
        values.append(parsed)
    return rows[0], header, items, np.array(values, dtype=np.float64).reshape(len(items), len(locations))


def load_dataset(prices_source, expenditures_source) -> ComparisonDataset:
    """Read a dataset from a prices CSV and an expenditures CSV.

    Both files carry the header ``item,LOC1,...,LOCM`` followed by one row per
    item. Headers and the item column must match exactly.
    """
    raw_p, header_p, items_p, prices = _read_matrix(prices_source, "price")
    raw_e, header_e, items_e, expend = _read_matrix(expenditures_source, "expenditure")
    if raw_p != raw_e:
        raise DatasetError("dimension mismatch: price and expenditure headers differ")
    if items_p != items_e:
        raise DatasetError("dimension mismatch: price and expenditure item columns differ")
    return ComparisonDataset(items_p, header_p[1:], prices, expend)


def format_number(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def write_matrix(path_or_buffer, items: Sequence, locations: Sequence, matrix) -> None:
    own = isinstance(path_or_buffer, (str, Path))
    fh = open(path_or_buffer, "w", newline="", encoding="utf-8") if own else path_or_buffer
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", *locations])
        for item, row in zip(items, np.asarray(matrix)):
            w.writerow([item, *(format_number(v) for v in row)])
    finally:
        if own:
            fh.close()


def write_dataset(dataset: ComparisonDataset, prices_path, expenditures_path) -> None:
    write_matrix(prices_path, dataset.items, dataset.locations, dataset.prices)
    write_matrix(expenditures_path, dataset.items, dataset.locations, dataset.expenditures)


def dataset_to_csv_text(dataset: ComparisonDataset) -> tuple[str, str]:
    bufs = io.StringIO(), io.StringIO()
    write_matrix(bufs[0], dataset.items, dataset.locations, dataset.prices)
    write_matrix(bufs[1], dataset.items, dataset.locations, dataset.expenditures)
    return bufs[0].getvalue(), bufs[1].getvalue()

