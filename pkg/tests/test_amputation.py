import numpy as np
import pytest
from _helpers import one_factor_matrix
from hypothesis import given, settings
from hypothesis import strategies as st

from chainimpute.amputation import (
    MissingnessSpec,
    amputate,
    column_budgets,
    count_unique_missing_patterns,
    mar_donors,
    pattern_count_curve,
    removal_budget,
    tail_bounds,
)
from chainimpute.data import DataMatrix
from chainimpute.errors import ConfigurationError, DataError


def test_nothing_removed_at_tiny_rate():
    data = DataMatrix.from_array(np.arange(6.0).reshape(3, 2))
    out = amputate(data, MissingnessSpec("mcar", 0.01, 0))
    assert out is data


def test_mcar_exact_count():
    data = DataMatrix.from_array(np.random.default_rng(0).normal(size=(10, 5)))
    out = amputate(data, MissingnessSpec("mcar", 0.2, 1))
    assert (out.response_indicator == 0).sum() == 10


def test_mnar_tail_on_1_to_100():
    col = np.arange(1.0, 101.0)
    data = DataMatrix.from_array(col[:, None])
    out = amputate(data, MissingnessSpec("mnar", 0.2, 3))
    masked = col[~out.mask[:, 0]]
    assert masked.size == 20
    # brute force: the sorted column's lower and upper 10 values
    s = np.sort(col)
    allowed = set(s[:10]) | set(s[-10:])
    assert set(masked) <= allowed
    assert np.all((masked <= 10) | (masked >= 91))


def test_budget_helpers():
    assert removal_budget(10, 5, 0.2) == 10
    assert removal_budget(3, 3, 0.05) == 0
    assert column_budgets(10, 3).tolist() == [4, 3, 3]


def test_tail_bounds_linear_interpolation():
    low, high = tail_bounds(np.arange(1.0, 101.0), 0.2)
    assert low == pytest.approx(np.percentile(np.arange(1.0, 101.0), 10))
    assert high == pytest.approx(np.percentile(np.arange(1.0, 101.0), 90))


def test_mar_donors_never_self():
    donors = mar_donors(6, MissingnessSpec("mar", 0.3, 9))
    assert all(donors[i] != i for i in range(6))


@pytest.mark.parametrize("rate", [0.0, -0.1, 0.96, 1.0])
def test_bad_rate(rate):
    with pytest.raises(ConfigurationError):
        MissingnessSpec("mcar", rate)


def test_mar_needs_two_columns():
    with pytest.raises(ConfigurationError):
        amputate(DataMatrix.from_array(np.ones((5, 1))), MissingnessSpec("mar", 0.4))


def test_requires_complete_input():
    with pytest.raises(DataError):
        amputate(DataMatrix.from_array([[1.0, np.nan], [2.0, 3.0]]), MissingnessSpec("mcar", 0.5))


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        MissingnessSpec("random", 0.1)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["mcar", "mar", "mnar"]), rate=st.floats(0.01, 0.95),
       seed=st.integers(0, 2**32), n=st.integers(5, 40), d=st.integers(2, 6))
def test_exact_count_and_determinism(kind, rate, seed, n, d):
    X = np.random.default_rng(seed).normal(size=(n, d))
    data = DataMatrix.from_array(X)
    spec = MissingnessSpec(kind, rate, seed)
    a, b = amputate(data, spec), amputate(data, spec)
    assert np.array_equal(a.mask, b.mask)
    assert (~a.mask).sum() == removal_budget(n, d, rate)
    assert np.array_equal(a.values[a.mask], X[a.mask])


def test_ties_still_hit_exact_count():
    X = np.repeat(np.arange(4.0), 10)[:, None] * np.ones((1, 3))
    out = amputate(DataMatrix.from_array(X), MissingnessSpec("mnar", 0.5, 2))
    assert (~out.mask).sum() == removal_budget(40, 3, 0.5)


class TestPatterns:
    def test_complete_is_one(self):
        assert count_unique_missing_patterns(np.ones((4, 3), int)) == 1

    def test_hand_example(self):
        r = np.array([[1, 1, 0], [1, 0, 1], [1, 1, 0]])
        assert count_unique_missing_patterns(r) == 2

    def test_curve(self):
        data = one_factor_matrix(300, 10, 0.7, seed=1)
        curve = pattern_count_curve(data, "mnar", [0.05, 0.1, 0.2], seed=0)
        assert [r for r, _ in curve] == [0.05, 0.1, 0.2]
        assert all(c >= 1 for _, c in curve)
