"""Hyperparameters, the regressor kind enum and the common model surface."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np

from ..errors import ConfigurationError, DataError, InsufficientDataError, ShapeError


class RegressorKind(str, Enum):
    RIDGE = "ridge"
    DECISION_TREE = "tree"
    RANDOM_FOREST = "forest"
    GRADIENT_BOOSTING = "gb"
    DEEP = "mlp"

    @classmethod
    def parse(cls, value) -> "RegressorKind":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        v = _ALIASES.get(v, v)
        try:
            return cls(v)
        except ValueError:
            raise ConfigurationError(f"unknown regressor kind {value!r}") from None


_ALIASES = {
    "lr": "ridge", "linear": "ridge",
    "dt": "tree", "decision_tree": "tree",
    "rf": "forest", "random_forest": "forest",
    "gradient_boosting": "gb", "boosting": "gb",
    "dr": "mlp", "deep": "mlp", "dnn": "mlp",
}


@dataclass(frozen=True)
class HyperParams:
    ridge_lambda: float = 1.0
    tree_max_depth: int = 6
    tree_min_leaf: int = 1
    forest_n_trees: int = 50
    gb_n_stages: int = 100
    gb_learning_rate: float = 0.1
    gb_max_depth: int = 3
    mlp_epochs: int = 200
    mlp_batch: int = 32
    mlp_learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.ridge_lambda >= 0, "ridge_lambda must be >= 0"),
            (self.tree_max_depth >= 1, "tree_max_depth must be >= 1"),
            (self.tree_min_leaf >= 1, "tree_min_leaf must be >= 1"),
            (self.forest_n_trees >= 1, "forest_n_trees must be >= 1"),
            (self.gb_n_stages >= 1, "gb_n_stages must be >= 1"),
            (0 < self.gb_learning_rate <= 1, "gb_learning_rate must lie in (0, 1]"),
            (self.gb_max_depth >= 1, "gb_max_depth must be >= 1"),
            (self.mlp_epochs >= 1, "mlp_epochs must be >= 1"),
            (self.mlp_batch >= 1, "mlp_batch must be >= 1"),
            (self.mlp_learning_rate > 0, "mlp_learning_rate must be > 0"),
            (self.seed >= 0, "seed must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown hyperparameters {sorted(unknown)}")
        return cls(**d)

    def replace(self, **kw) -> "HyperParams":
        return HyperParams(**{**self.to_dict(), **kw})


class RegressorModel:
    """Trained estimator.  Subclasses provide ``_predict`` and serialization."""

    kind: str
    n_features: int
    residual_std: float

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (m, {self.n_features}) input, got {X.shape}")
        return self._predict(X)

    def _predict(self, X):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(eq=False)
class ConstantModel(RegressorModel):
    """Predicts a fixed value; stands in when a column has fewer than two observed cells."""

    constant: float
    n_features: int
    residual_std: float = 0.0
    kind = "constant"

    def _predict(self, X):
        return np.full(X.shape[0], self.constant)

    def to_dict(self):
        return {"kind": self.kind, "constant": self.constant, "n_features": self.n_features,
                "residual_std": self.residual_std}

    @classmethod
    def from_dict(cls, d):
        return cls(d["constant"], d["n_features"], d["residual_std"])


def check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ShapeError(f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}")
    if X.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 training rows, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise ShapeError("need at least one predictor column")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("training data must be finite")
    return X, y


def population_std(resid) -> float:
    return float(np.std(resid)) if resid.size else 0.0
