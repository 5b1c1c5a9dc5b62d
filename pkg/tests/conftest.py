import numpy as np
import pytest

from ppp_reliability.data import ComparisonDataset, bilateral_view
from ppp_reliability.properties import InstanceSpec, random_instance


@pytest.fixture
def dataset_a():
    # columns: j then base k
    return ComparisonDataset(["n1", "n2"], ["J", "K"], [[2.0, 1.0], [4.0, 1.0]],
                             [[2.0, 1.0], [4.0, 1.0]])


@pytest.fixture
def view_a(dataset_a):
    return bilateral_view(dataset_a, "J", "K")


@pytest.fixture
def proportional_dataset():
    rng = np.random.default_rng(3)
    base = np.exp(rng.normal(size=12))
    lam = np.array([1.7, 0.4, 2.5, 1.0])
    prices = base[:, None] * lam[None, :]
    expend = rng.uniform(1.0, 10.0, size=(12, 4))
    return ComparisonDataset([f"i{n}" for n in range(12)], ["A", "B", "C", "D"], prices, expend)


@pytest.fixture
def random_dataset():
    return random_instance(InstanceSpec(25, 5, seed=11))


def write_pair(tmp_path, dataset, stem=""):
    from ppp_reliability.data import write_dataset

    p, e = tmp_path / f"{stem}prices.csv", tmp_path / f"{stem}expenditures.csv"
    write_dataset(dataset, p, e)
    return p, e
