"""Tree models: single regression tree, random forest, gradient boosting and the
random-forest classifier used for downstream evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateLabelError, ShapeError
from ._cart import Tree, grow_tree, presort
from .base import RegressorModel, check_training_data, population_std


def _sqrt_features(p: int) -> int:
    return max(1, int(math.floor(math.sqrt(p))))


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@dataclass(eq=False)
class TreeModel(RegressorModel):
    tree: Tree
    n_features: int
    residual_std: float = 0.0
    kind = "tree"

    def _predict(self, X):
        return self.tree.predict(X)[:, 0]

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "residual_std": self.residual_std,
                "tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Tree.from_dict(d["tree"]), d["n_features"], d["residual_std"])


@dataclass(eq=False)
class ForestModel(RegressorModel):
    trees: list
    n_features: int
    residual_std: float = 0.0
    kind = "forest"

    def member_predictions(self, X) -> np.ndarray:
        return np.stack([t.predict(X)[:, 0] for t in self.trees])

    def _predict(self, X):
        return self.member_predictions(X).mean(axis=0)

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "residual_std": self.residual_std,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls([Tree.from_dict(t) for t in d["trees"]], d["n_features"], d["residual_std"])


@dataclass(eq=False)
class BoostedModel(RegressorModel):
    """``base + learning_rate * sum(stage trees)``; each stage was fit to the
    residual left by the stages before it."""

    base: float
    learning_rate: float
    stages: list
    n_features: int
    residual_std: float = 0.0
    train_loss: list = field(default_factory=list)
    kind = "gb"

    def _predict(self, X):
        out = np.full(X.shape[0], self.base)
        for t in self.stages:
            out += self.learning_rate * t.predict(X)[:, 0]
        return out

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "residual_std": self.residual_std,
                "base": self.base, "learning_rate": self.learning_rate,
                "stages": [t.to_dict() for t in self.stages]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["base"], d["learning_rate"], [Tree.from_dict(t) for t in d["stages"]],
                   d["n_features"], d["residual_std"])


def fit_tree(X, y, max_depth=6, min_leaf=1) -> TreeModel:
    X, y = check_training_data(X, y)
    tree = grow_tree(X, y, max_depth=max_depth, min_leaf=min_leaf)
    model = TreeModel(tree, X.shape[1])
    model.residual_std = population_std(y - model._predict(X))
    return model


def fit_forest(X, y, n_trees=50, max_depth=6, min_leaf=1, seed=0) -> ForestModel:
    """Bagged trees with sqrt(p) candidate features per split; tree t uses seed (seed, t)."""
    X, y = check_training_data(X, y)
    n, p = X.shape
    order = presort(X)
    trees = []
    for t in range(n_trees):
        rng = _tree_rng(seed, t)
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        trees.append(grow_tree(X, y, counts, max_depth=max_depth, min_leaf=min_leaf,
                               max_features=_sqrt_features(p), rng=rng, order=order))
    model = ForestModel(trees, p)
    model.residual_std = population_std(y - model._predict(X))
    return model


def fit_boosting(X, y, n_stages=100, learning_rate=0.1, max_depth=3, min_leaf=1) -> BoostedModel:
    X, y = check_training_data(X, y)
    order = presort(X)
    base = float(y.mean())
    F = np.full(y.shape[0], base)
    stages, losses = [], []
    for _ in range(n_stages):
        resid = y - F
        tree = grow_tree(X, resid, max_depth=max_depth, min_leaf=min_leaf, order=order)
        F = F + learning_rate * tree.predict(X)[:, 0]
        stages.append(tree)
        losses.append(float(np.mean((y - F) ** 2)))
    model = BoostedModel(base, learning_rate, stages, X.shape[1], train_loss=losses)
    model.residual_std = population_std(y - F)
    return model


# -- classifier ----------------------------------------------------------------

@dataclass(eq=False)
class ClassifierModel:
    classes: np.ndarray
    trees: list
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (m, {self.n_features}) input, got {X.shape}")
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def classify(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]


def canonical_row_order(X, codes) -> np.ndarray:
    """Permutation sorting rows by (x_0, x_1, ..., label); makes fitting row-order independent."""
    keys = [codes] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def fit_classifier(X, labels, n_trees=100, max_depth=12, min_leaf=1, seed=0) -> ClassifierModel:
    """Random forest classifier (Gini splits, bootstrap rows, sqrt(p) features per split)."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ShapeError("X must be (n, p) with one label per row")
    classes, codes = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise DegenerateLabelError("training labels contain a single class")
    perm = canonical_row_order(X, codes)
    X, codes = X[perm], codes[perm]
    n, p = X.shape
    Y = np.zeros((n, classes.size))
    Y[np.arange(n), codes] = 1.0
    order = presort(X)
    trees = []
    for t in range(n_trees):
        rng = _tree_rng(seed, t)
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        trees.append(grow_tree(X, Y, counts, max_depth=max_depth, min_leaf=min_leaf,
                               max_features=_sqrt_features(p), rng=rng, order=order))
    return ClassifierModel(classes, trees, p)


def classify(model: ClassifierModel, X) -> np.ndarray:
    return model.classify(X)
