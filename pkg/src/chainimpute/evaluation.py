"""Scoring and experiment bookkeeping: RMSE/NRMSE over amputated cells, nested
cross-validated random-forest classification, the sweep table, best-model
voting across missing rates and per-model NRMSE sums."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .data import DataMatrix
from .errors import CoverageError, NormalizationError, ShapeError, StratificationError
from .regressors import fit_classifier

log = logging.getLogger(__name__)

RATE_GRID = (5, 10, 20, 30, 40, 50, 60, 70, 80)
DEFAULT_GRID = {"n_trees": (50, 100), "max_depth": (6, 12)}


@dataclass(frozen=True)
class ImputationScore:
    rmse: float
    nrmse: float
    n_cells: int


def _values(x):
    return x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=np.float64)


def score_imputation(actual, imputed, mask) -> ImputationScore:
    """RMSE over cells where ``mask`` is 0, and that RMSE divided by the mean actual value there.

    ``mask`` is a response indicator (1 observed, 0 amputated) or a
    :class:`DataMatrix` whose mask is used.
    """
    a, b = _values(actual), _values(imputed)
    m = mask.mask if isinstance(mask, DataMatrix) else np.asarray(mask).astype(bool)
    if a.shape != b.shape or a.shape != m.shape:
        raise ShapeError(f"shapes differ: actual {a.shape}, imputed {b.shape}, mask {m.shape}")
    cells = ~m
    n = int(cells.sum())
    if n == 0:
        raise ShapeError("no amputated cells to score")
    truth, guess = a[cells], b[cells]
    rmse = math.sqrt(float(np.mean((truth - guess) ** 2)))
    mean = float(truth.mean())
    if mean == 0.0:
        raise NormalizationError("mean of the actual values over the scored cells is zero")
    return ImputationScore(rmse, rmse / mean, n)


# -- cross-validation ----------------------------------------------------------

def stratified_folds(labels, n_folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per row; each class is shuffled and dealt round-robin."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (np.arange(idx.size) + offset) % n_folds
        offset += idx.size
    return fold


def _n_folds(labels, wanted: int) -> int:
    _, counts = np.unique(labels, return_counts=True)
    smallest = int(counts.min())
    if smallest < 2:
        raise StratificationError(
            f"a class has {smallest} member(s); stratified folds need at least 2 per class. "
            "Merge rare classes or drop them before classification.")
    if smallest < wanted:
        log.warning("smallest class has %d members; using %d folds instead of %d", smallest, smallest, wanted)
        return smallest
    return wanted


def _accuracy(Xtr, ytr, Xte, yte, params, seed):
    model = fit_classifier(Xtr, ytr, n_trees=params["n_trees"], max_depth=params["max_depth"], seed=seed)
    return float(np.mean(model.classify(Xte) == yte))


def _expand(grid):
    grid = grid or DEFAULT_GRID
    keys = sorted(grid)
    return [dict(zip(keys, vals)) for vals in product(*(grid[k] for k in keys))]


@dataclass
class CvResult:
    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: list
    chosen: list = field(default_factory=list)

    @property
    def n_outer(self) -> int:
        return len(self.fold_accuracies)

    def to_dict(self):
        return asdict(self)


def cv_accuracy(X, labels, n_folds: int = 10, n_trees: int = 100, max_depth: int = 12, seed: int = 0) -> CvResult:
    """Plain stratified k-fold accuracy of the forest classifier, no tuning."""
    X = _values(X)
    labels = np.asarray(labels)
    k = _n_folds(labels, n_folds)
    fold = stratified_folds(labels, k, seed)
    accs = []
    params = {"n_trees": n_trees, "max_depth": max_depth}
    for f in range(k):
        te = fold == f
        accs.append(_accuracy(X[~te], labels[~te], X[te], labels[te], params, seed))
    return CvResult(float(np.mean(accs)), float(np.std(accs)), accs, [params] * k)


def nested_cv_classify(X, labels, grid=None, *, n_outer: int = 10, n_inner: int = 2, seed: int = 0) -> CvResult:
    """Stratified nested CV: inner folds pick the grid point, the outer fold scores it.

    Grid ties go to the first point in sorted-key order.
    """
    X = _values(X)
    labels = np.asarray(labels)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ShapeError("X must be (n, p) with one label per row")
    points = _expand(grid)
    k = _n_folds(labels, n_outer)
    outer = stratified_folds(labels, k, seed)
    accs, chosen = [], []
    for f in range(k):
        te = outer == f
        Xtr, ytr = X[~te], labels[~te]
        inner = stratified_folds(ytr, n_inner, seed + 1 + f)
        best, best_score = points[0], -np.inf
        for params in points:
            scores = []
            for g in range(n_inner):
                v = inner == g
                if np.unique(ytr[~v]).size < 2:
                    continue
                scores.append(_accuracy(Xtr[~v], ytr[~v], Xtr[v], ytr[v], params, seed))
            score = float(np.mean(scores)) if scores else -np.inf
            if score > best_score:
                best, best_score = params, score
        accs.append(_accuracy(Xtr, ytr, X[te], labels[te], best, seed))
        chosen.append(best)
    return CvResult(float(np.mean(accs)), float(np.std(accs)), accs, chosen)


# -- sweep table ---------------------------------------------------------------

TABLE_COLUMNS = (
    "dataset", "kind", "rate_pct", "model",
    "train_rmse", "train_nrmse", "train_cells",
    "test_rmse", "test_nrmse", "test_cells",
    "cv_mean", "cv_std", "patterns_train", "patterns_test",
)


def _key(dataset, kind, rate_pct, model):
    return (str(dataset), str(kind).lower(), int(rate_pct), str(model))


class SweepTable:
    """Results keyed by (dataset, missing kind, rate in percent, model)."""

    def __init__(self, cells=None):
        self._cells = {}
        for key, rec in (cells or {}).items():
            self.put(*key, **rec)

    def put(self, dataset, kind, rate_pct, model, **metrics):
        if int(rate_pct) not in RATE_GRID:
            raise CoverageError(f"rate {rate_pct}% is outside the grid {RATE_GRID}")
        unknown = set(metrics) - set(TABLE_COLUMNS[4:])
        if unknown:
            raise KeyError(f"unknown metrics {sorted(unknown)}")
        self._cells[_key(dataset, kind, rate_pct, model)] = dict(metrics)

    def get(self, dataset, kind, rate_pct, model) -> dict | None:
        return self._cells.get(_key(dataset, kind, rate_pct, model))

    def __contains__(self, key):
        return _key(*key) in self._cells

    def __len__(self):
        return len(self._cells)

    def keys(self):
        return sorted(self._cells)

    def models(self, dataset, kind):
        ds, kd = str(dataset), str(kind).lower()
        return sorted({k[3] for k in self._cells if k[0] == ds and k[1] == kd})

    def groups(self):
        return sorted({(k[0], k[1]) for k in self._cells})

    def nrmse(self, dataset, kind, rate_pct, model, split="test"):
        rec = self.get(dataset, kind, rate_pct, model)
        if rec is None:
            return None
        return rec.get(f"{split}_nrmse")

    def rows(self):
        for key in self.keys():
            rec = self._cells[key]
            yield dict(zip(TABLE_COLUMNS[:4], key)) | {c: rec.get(c) for c in TABLE_COLUMNS[4:]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in self.rows():
            w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                        for c in TABLE_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(list(self.rows()), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SweepTable":
        table = cls()
        for row in json.loads(text):
            metrics = {c: row[c] for c in TABLE_COLUMNS[4:] if row.get(c) is not None}
            table.put(row["dataset"], row["kind"], row["rate_pct"], row["model"], **metrics)
        return table


def _coverage(table, dataset, kind, models, split):
    missing = [(dataset, kind, r, m) for m in models for r in RATE_GRID
               if table.nrmse(dataset, kind, r, m, split) is None]
    if missing:
        raise CoverageError(f"{len(missing)} table cell(s) missing", missing)


def sum_nrmse(table: SweepTable, dataset, kind, model, split="test") -> float:
    _coverage(table, dataset, kind, [model], split)
    return float(sum(table.nrmse(dataset, kind, r, model, split) for r in RATE_GRID))


def vote_best_model(table: SweepTable, dataset, kind, models=None, split="test") -> str:
    """Plurality of per-rate winners (lowest NRMSE); ties go to the lowest NRMSE sum, then the name."""
    models = sorted(models) if models is not None else table.models(dataset, kind)
    if len(models) < 2:
        raise CoverageError(f"voting needs at least two models, found {models}")
    _coverage(table, dataset, kind, models, split)
    wins = dict.fromkeys(models, 0)
    for r in RATE_GRID:
        scores = [(table.nrmse(dataset, kind, r, m, split), m) for m in models]
        wins[min(scores)[1]] += 1
    totals = {m: sum_nrmse(table, dataset, kind, m, split) for m in models}
    return min(models, key=lambda m: (-wins[m], totals[m], m))
