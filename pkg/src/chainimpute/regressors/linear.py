"""Ridge regression with an unpenalized intercept.

Minimizes ``0.5*||y - X w - b||^2 + 0.5*lam*||w||^2``; with ``lam = 0`` this is
ordinary least squares (minimum-norm solution when rank deficient).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import RegressorModel, check_training_data, population_std


@dataclass(eq=False)
class RidgeModel(RegressorModel):
    coef: np.ndarray
    intercept: float
    residual_std: float = 0.0
    kind = "ridge"

    @property
    def n_features(self) -> int:
        return self.coef.shape[0]

    def _predict(self, X):
        return X @ self.coef + self.intercept

    def to_dict(self):
        return {"kind": self.kind, "coef": self.coef.tolist(), "intercept": self.intercept,
                "residual_std": self.residual_std}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["coef"], dtype=np.float64), d["intercept"], d["residual_std"])


def fit_ridge(X, y, lam: float = 1.0) -> RidgeModel:
    X, y = check_training_data(X, y)
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    yc = y - ym
    if lam > 0:
        A = Xc.T @ Xc
        A[np.diag_indices_from(A)] += lam
        try:
            w = np.linalg.solve(A, Xc.T @ yc)
        except np.linalg.LinAlgError:
            w = np.linalg.lstsq(A, Xc.T @ yc, rcond=None)[0]
    else:
        w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    b = float(ym - xm @ w)
    model = RidgeModel(w, b)
    model.residual_std = population_std(y - model._predict(X))
    return model


def ridge_objective(X, y, coef, intercept, lam) -> float:
    r = y - X @ coef - intercept
    return 0.5 * float(r @ r) + 0.5 * lam * float(coef @ coef)


def ridge_gradient(X, y, coef, intercept, lam):
    """Gradient of :func:`ridge_objective` as ``(d/dw, d/db)``."""
    r = y - X @ coef - intercept
    return -X.T @ r + lam * coef, -float(r.sum())
