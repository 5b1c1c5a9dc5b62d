import math
import warnings

import numpy as np
import pytest

from ppp_reliability import bilateral as bl
from ppp_reliability.bilateral import IndexUndefinedError, Method, WeightKind
from ppp_reliability.data import view_from_arrays

LN2 = math.log(2.0)


def test_dataset_a_level_indexes(view_a):
    for f in (bl.laspeyres, bl.paasche, bl.fisher):
        assert f(view_a).value == pytest.approx(3.0, rel=1e-12, abs=0)
    est, dec = bl.walsh(view_a)
    assert est.value == pytest.approx(3.0, rel=1e-12)
    r2 = math.sqrt(2.0)
    assert dec.p_a == pytest.approx(3 * r2 / (1 + r2), rel=1e-14)
    assert dec.p_b == pytest.approx(r2 / (1 + r2), rel=1e-14)


def test_dataset_a_weight_schemes(view_a):
    np.testing.assert_allclose(bl.weight_scheme(view_a, WeightKind.ARITHMETIC).weights,
                               [5 / 12, 7 / 12], rtol=1e-15)
    np.testing.assert_allclose(bl.weight_scheme(view_a, WeightKind.HARMONIC).weights,
                               [7 / 17, 10 / 17], rtol=1e-15)


def test_dataset_a_log_indexes(view_a):
    t = bl.compute_index(view_a, Method.TORNQVIST)
    assert t.log_value == pytest.approx(19 / 12 * LN2, rel=1e-14)
    assert t.value == pytest.approx(2.996614153753363, rel=1e-14)
    pd = bl.compute_index(view_a, "pd")
    assert pd.log_value == pytest.approx(27 / 17 * LN2, rel=1e-14)
    assert pd.value == pytest.approx(3.0068133077121098, rel=1e-14)
    # equal-split logarithmic weights land on ln 3
    assert bl.compute_index(view_a, "sv").log_value == pytest.approx(math.log(3.0), rel=1e-14)


@pytest.mark.parametrize("method", bl.BILATERAL_METHODS)
def test_proportional_prices_give_lambda(method):
    rng = np.random.default_rng(1)
    pk = np.exp(rng.normal(size=9))
    v = view_from_arrays(2.5 * pk, pk, rng.uniform(1, 5, 9), rng.uniform(1, 5, 9))
    assert bl.compute_index(v, method).value == pytest.approx(2.5, rel=1e-13)


@pytest.mark.parametrize("method", bl.BILATERAL_METHODS)
def test_self_pair_is_one(method, random_dataset):
    from ppp_reliability.data import bilateral_view

    v = bilateral_view(random_dataset, 1, 1)
    assert bl.compute_index(v, method).value == pytest.approx(1.0, abs=1e-15)


def test_equal_shares_all_kinds_agree():
    s = np.array([0.2, 0.3, 0.5])
    v = view_from_arrays([1, 2, 3], [1, 1, 1], s, s)
    for kind in WeightKind:
        np.testing.assert_allclose(bl.weight_scheme(v, kind).weights, s, rtol=1e-14)


def test_logarithmic_mean_limits():
    assert bl.logarithmic_mean(np.array([0.3]), np.array([0.3]))[0] == 0.3
    a, b = np.array([2.0]), np.array([1.0])
    assert bl.logarithmic_mean(a, b)[0] == pytest.approx(1 / math.log(2))
    near = bl.logarithmic_mean(np.array([1.0 + 1e-13]), np.array([1.0]))[0]
    assert near == pytest.approx(1.0, rel=1e-12)


def test_paasche_error_on_negative_aggregate():
    v = view_from_arrays([10.0, 1.0], [1.0, 1.0], [1.0, -0.95], [1.0, 1.0])
    with pytest.raises(IndexUndefinedError, match="Paasche undefined: nonpositive harmonic aggregate"):
        bl.paasche(v)


def test_log_weights_reject_nonpositive_share_naming_item():
    v = view_from_arrays([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(IndexUndefinedError, match="item"):
        bl.weight_scheme(v, WeightKind.LOGARITHMIC)
    with pytest.raises(IndexUndefinedError, match="item"):
        bl.weight_scheme(v, WeightKind.HARMONIC)
    # arithmetic weights tolerate zeros
    bl.weight_scheme(v, WeightKind.ARITHMETIC)
    assert bl.weight_scheme(v, WeightKind.LOGARITHMIC, tolerate_zero=True).weights[1] == 0.0


def test_walsh_negative_share_policies():
    v = view_from_arrays([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], [2.0, -0.5, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(IndexUndefinedError, match="item 1"):
        bl.walsh(v)
    with pytest.warns(RuntimeWarning, match="dropped 1"):
        est, dec = bl.walsh(v, "drop")
    assert dec.weights[1] == 0.0 and est.value > 0
    with pytest.raises(ValueError):
        bl.walsh(v, "bogus")


def test_method_parse_aliases():
    assert Method.parse("SV") is Method.SATO_VARTIA
    assert Method.parse("cpd") is Method.PRODUCT_DUMMY
    assert Method.parse("Fisher") is Method.FISHER
    with pytest.raises(ValueError):
        Method.parse("nope")


def test_time_reversal(random_dataset):
    from ppp_reliability.data import bilateral_view

    fwd, back = bilateral_view(random_dataset, 0, 2), bilateral_view(random_dataset, 2, 0)
    for m in (Method.FISHER, Method.TORNQVIST, Method.SATO_VARTIA, Method.WALSH, Method.PRODUCT_DUMMY):
        a, b = bl.compute_index(fwd, m), bl.compute_index(back, m)
        assert a.log_value + b.log_value == pytest.approx(0.0, abs=1e-13)
    # Laspeyres and Paasche are each other's reversal
    assert bl.laspeyres(fwd).value * bl.paasche(back).value == pytest.approx(1.0, rel=1e-13)


def test_geks_is_not_bilateral(view_a):
    with pytest.raises(ValueError):
        bl.compute_index(view_a, Method.GEKS)


def test_no_warning_on_clean_walsh(view_a):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bl.walsh(view_a, "drop")
