import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainimpute.errors import CoverageError, NormalizationError, ShapeError, StratificationError
from chainimpute.evaluation import (
    RATE_GRID,
    SweepTable,
    cv_accuracy,
    nested_cv_classify,
    score_imputation,
    stratified_folds,
    sum_nrmse,
    vote_best_model,
)

SMALL_GRID = {"n_trees": [10], "max_depth": [4, 8]}


def table_from(scores):
    """``scores`` maps model -> list of 9 NRMSEs."""
    t = SweepTable()
    for model, vals in scores.items():
        for rate, v in zip(RATE_GRID, vals):
            t.put("ds", "mar", rate, model, test_nrmse=v)
    return t


class TestScore:
    def test_perfect(self):
        s = score_imputation([[1.0, 2.0]], [[1.0, 2.0]], [[0, 0]])
        assert (s.rmse, s.nrmse) == (0.0, 0.0)

    def test_hand_pair(self):
        s = score_imputation([[1.0], [2.0]], [[2.0], [4.0]], [[0], [0]])
        assert s.rmse == pytest.approx(math.sqrt(2.5), abs=1e-12)
        assert s.nrmse == pytest.approx(math.sqrt(2.5) / 1.5, abs=1e-12)

    def test_only_masked_cells(self):
        s = score_imputation([[1.0, 100.0]], [[2.0, -5.0]], [[0, 1]])
        assert s.n_cells == 1 and s.rmse == 1.0

    def test_zero_mean(self):
        with pytest.raises(NormalizationError):
            score_imputation([[1.0], [-1.0]], [[0.0], [0.0]], [[0], [0]])

    def test_shape_and_empty(self):
        with pytest.raises(ShapeError):
            score_imputation([[1.0]], [[1.0, 2.0]], [[0]])
        with pytest.raises(ShapeError):
            score_imputation([[1.0]], [[1.0]], [[1]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
    def test_scale_equivariance(self, seed, c):
        g = np.random.default_rng(seed)
        a = g.uniform(1, 5, size=(6, 3))
        b = a + g.normal(size=(6, 3))
        m = g.integers(0, 2, size=(6, 3))
        m[0, 0] = 0
        s1, s2 = score_imputation(a, b, m), score_imputation(c * a, c * b, m)
        assert s2.rmse == pytest.approx(c * s1.rmse, rel=1e-9)
        assert s2.nrmse == pytest.approx(s1.nrmse, rel=1e-9)


class TestVote:
    def test_unanimous(self):
        t = table_from({"A": [0.1] * 9, "B": [0.2] * 9})
        assert vote_best_model(t, "ds", "mar") == "A"

    def test_plurality(self):
        t = table_from({"A": [0.1] * 5 + [0.3] * 4, "B": [0.2] * 9})
        assert vote_best_model(t, "ds", "mar") == "A"

    def test_tie_break_on_sum(self):
        a = [0.1] * 4 + [0.5] * 4 + [0.9]
        b = [0.5] * 4 + [0.1] * 4 + [0.95]
        c = [0.9] * 8 + [0.05]
        t = table_from({"A": a, "B": b, "C": c})
        assert sum_nrmse(t, "ds", "mar", "A") < sum_nrmse(t, "ds", "mar", "B")
        assert vote_best_model(t, "ds", "mar") == "A"

    def test_coverage(self):
        t = table_from({"A": [0.1] * 9, "B": [0.2] * 8})
        with pytest.raises(CoverageError):
            vote_best_model(t, "ds", "mar")
        with pytest.raises(CoverageError):
            vote_best_model(table_from({"A": [0.1] * 9}), "ds", "mar")


class TestSum:
    def test_zero(self):
        assert sum_nrmse(table_from({"A": [0.0] * 9}), "ds", "mar", "A") == 0.0

    def test_point_one(self):
        assert sum_nrmse(table_from({"A": [0.1] * 9}), "ds", "mar", "A") == pytest.approx(0.9)

    def test_missing_rate(self):
        with pytest.raises(CoverageError):
            sum_nrmse(table_from({"A": [0.1] * 8}), "ds", "mar", "A")


class TestTable:
    def test_off_grid_rate(self):
        with pytest.raises(CoverageError):
            SweepTable().put("ds", "mar", 15, "A", test_nrmse=0.1)

    def test_json_round_trip(self):
        t = table_from({"A": [0.1 * i for i in range(9)]})
        back = SweepTable.from_json(t.to_json())
        assert back.to_csv() == t.to_csv() and len(back) == 9


class TestCV:
    def test_folds_partition(self):
        labels = np.repeat([0, 1, 2], [10, 13, 7])
        folds = stratified_folds(labels, 5, seed=1)
        assert set(folds.tolist()) == set(range(5))
        for cls in (0, 1, 2):
            counts = np.bincount(folds[labels == cls], minlength=5)
            assert counts.max() - counts.min() <= 1

    def test_separable(self):
        g = np.random.default_rng(0)
        x = g.normal(size=(200, 3))
        y = (x[:, 0] > 0).astype(int)
        res = nested_cv_classify(x, y, SMALL_GRID, n_outer=5, seed=1)
        assert res.mean_accuracy >= 0.99 and res.n_outer == 5

    def test_random_labels(self):
        g = np.random.default_rng(1)
        x = g.normal(size=(500, 4))
        y = g.permutation(np.repeat([0, 1], 250))
        res = nested_cv_classify(x, y, SMALL_GRID, n_outer=5, seed=2)
        assert 0.4 <= res.mean_accuracy <= 0.6

    def test_small_class_collapses_folds(self):
        y = np.array([0] * 20 + [1] * 4)
        x = np.c_[y + 0.01 * np.arange(24)]
        assert cv_accuracy(x, y, n_folds=10, n_trees=5).n_outer == 4

    def test_singleton_class(self):
        y = np.array([0] * 10 + [1])
        with pytest.raises(StratificationError):
            nested_cv_classify(np.zeros((11, 1)), y, SMALL_GRID)
