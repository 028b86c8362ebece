"""Pluggable per-variable estimators for chained imputation."""
from __future__ import annotations

import numpy as np

from .base import ConstantModel, HyperParams, RegressorKind, RegressorModel
from .linear import RidgeModel, fit_ridge, ridge_gradient, ridge_objective
from .mlp import MLPModel, fit_mlp
from .trees import (
    BoostedModel,
    ClassifierModel,
    ForestModel,
    TreeModel,
    classify,
    fit_boosting,
    fit_classifier,
    fit_forest,
    fit_tree,
)

__all__ = [
    "BoostedModel", "ClassifierModel", "ConstantModel", "ForestModel", "HyperParams",
    "MLPModel", "RegressorKind", "RegressorModel", "RidgeModel", "TreeModel",
    "classify", "fit_classifier", "fit_regressor", "model_from_dict", "predict",
    "ridge_gradient", "ridge_objective", "sample_prediction",
]


def fit_regressor(kind, X, y, hyper: HyperParams | None = None, *, seed: int | None = None) -> RegressorModel:
    """Train one estimator of the requested kind; ``seed`` overrides ``hyper.seed``."""
    kind = RegressorKind.parse(kind)
    h = hyper or HyperParams()
    s = h.seed if seed is None else int(seed)
    if kind is RegressorKind.RIDGE:
        return fit_ridge(X, y, h.ridge_lambda)
    if kind is RegressorKind.DECISION_TREE:
        return fit_tree(X, y, h.tree_max_depth, h.tree_min_leaf)
    if kind is RegressorKind.RANDOM_FOREST:
        return fit_forest(X, y, h.forest_n_trees, h.tree_max_depth, h.tree_min_leaf, seed=s)
    if kind is RegressorKind.GRADIENT_BOOSTING:
        return fit_boosting(X, y, h.gb_n_stages, h.gb_learning_rate, h.gb_max_depth, h.tree_min_leaf)
    return fit_mlp(X, y, h.mlp_epochs, h.mlp_batch, h.mlp_learning_rate, seed=s)


def predict(model: RegressorModel, X) -> np.ndarray:
    return model.predict(X)


def sample_prediction(model: RegressorModel, X, rng: np.random.Generator) -> np.ndarray:
    """Prediction plus Gaussian noise at the model's training residual scale."""
    mean = model.predict(X)
    if model.residual_std == 0.0:
        return mean
    return mean + rng.normal(0.0, model.residual_std, size=mean.shape[0])


_FROM_DICT = {
    "ridge": RidgeModel, "tree": TreeModel, "forest": ForestModel, "gb": BoostedModel,
    "mlp": MLPModel, "constant": ConstantModel,
}


def model_from_dict(d) -> RegressorModel:
    return _FROM_DICT[d["kind"]].from_dict(d)
