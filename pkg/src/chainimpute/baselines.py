"""Imputers outside the chained-equation family: column median, k nearest
neighbours, iterative truncated SVD and matrix factorization by alternating
least squares.  Each one fits and imputes a single matrix."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DataMatrix
from .errors import ConfigurationError, UnimputableColumnError


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Median:
    name = "median"

    def resolved(self, n, d):
        return self

    def to_dict(self):
        return {"kind": self.name}


@dataclass(frozen=True)
class KNN:
    k_neighbors: int = 5
    name = "knn"

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigurationError("k_neighbors must be >= 1")

    def resolved(self, n, d):
        return self

    def to_dict(self):
        return {"kind": self.name, "k_neighbors": self.k_neighbors}


def _check_rank(rank, n, d):
    if not 1 <= rank <= min(n, d):
        raise ConfigurationError(f"rank must lie in [1, {min(n, d)}], got {rank}")


@dataclass(frozen=True)
class IterativeSVD:
    rank: int | None = None     # None resolves to min(10, d - 1)
    max_iter: int = 100
    tol: float = 1e-4
    name = "isvd"

    def resolved(self, n, d):
        rank = max(1, min(10, d - 1)) if self.rank is None else self.rank
        _check_rank(rank, n, d)
        return IterativeSVD(rank, self.max_iter, self.tol)

    def to_dict(self):
        return {"kind": self.name, "rank": self.rank, "max_iter": self.max_iter, "tol": self.tol}


@dataclass(frozen=True)
class MatrixFactorization:
    rank: int | None = None     # None resolves to min(8, d - 1)
    l2: float = 0.1
    max_iter: int = 200
    tol: float = 1e-6
    name = "mf"

    def resolved(self, n, d):
        rank = max(1, min(8, d - 1)) if self.rank is None else self.rank
        _check_rank(rank, n, d)
        if self.l2 < 0:
            raise ConfigurationError("l2 must be >= 0")
        return MatrixFactorization(rank, self.l2, self.max_iter, self.tol)

    def to_dict(self):
        return {"kind": self.name, "rank": self.rank, "l2": self.l2,
                "max_iter": self.max_iter, "tol": self.tol}


BASELINE_NAMES = ("median", "knn", "isvd", "mf")


def parse_baseline(spec) -> Median | KNN | IterativeSVD | MatrixFactorization:
    """Build a baseline from a name or a dict such as ``{"kind": "knn", "k_neighbors": 3}``."""
    if not isinstance(spec, dict):
        spec = {"kind": spec}
    spec = dict(spec)
    kind = str(spec.pop("kind")).lower()
    cls = {"median": Median, "knn": KNN, "isvd": IterativeSVD, "iterative_svd": IterativeSVD,
           "mf": MatrixFactorization, "matrix_factorization": MatrixFactorization}.get(kind)
    if cls is None:
        raise ConfigurationError(f"unknown baseline {kind!r}")
    try:
        return cls(**spec)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


@dataclass
class BaselineResult:
    data: DataMatrix
    converged: bool = True
    n_iter: int = 0
    objective: list = field(default_factory=list)


def _require_observed(data: DataMatrix):
    for j in range(data.d):
        if not data.mask[:, j].any():
            raise UnimputableColumnError(data.column_names[j])


def _column_medians(data: DataMatrix):
    return np.array([np.median(data.observed_column(j)) for j in range(data.d)])


def _finish(data: DataMatrix, estimate) -> DataMatrix:
    out = np.where(data.mask, data.values, estimate)
    return DataMatrix(out, np.ones_like(data.mask), data.column_names)


def _scales(data: DataMatrix):
    s = np.array([data.observed_column(j).std() for j in range(data.d)])
    return np.where(s > 0, s, 1.0)


def impute_median(data: DataMatrix) -> BaselineResult:
    _require_observed(data)
    return BaselineResult(_finish(data, data.filled(_column_medians(data))))


def impute_knn(data: DataMatrix, k: int = 5) -> BaselineResult:
    """Mean of the k nearest rows that observe the column.

    Distances use co-observed columns only (scaled by observed column std)
    and are inflated by sqrt(d / #co-observed).  Ties go to the row that
    sorts first by content, so the result does not depend on row order.
    """
    _require_observed(data)
    n, d = data.shape
    medians = _column_medians(data)
    Z = np.where(data.mask, data.values / _scales(data), 0.0)
    M = data.mask.astype(np.float64)
    # canonical rank of every row: by values (missing as +inf), then by mask
    keys = [data.mask[:, j] for j in range(d - 1, -1, -1)]
    keys += [np.where(data.mask[:, j], data.values[:, j], np.inf) for j in range(d - 1, -1, -1)]
    rank = np.empty(n, dtype=np.int64)
    rank[np.lexsort(keys)] = np.arange(n)
    est = data.filled(0.0)
    for i in np.nonzero(~data.mask.all(axis=1))[0]:
        co = M @ M[i]
        diff = (Z - Z[i]) * M * M[i]
        sq = (diff * diff).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(co > 0, np.sqrt(sq * d / co), np.inf)
        dist[i] = np.inf
        for j in np.nonzero(~data.mask[i])[0]:
            cand = np.nonzero(data.mask[:, j] & np.isfinite(dist))[0]
            if cand.size == 0:
                est[i, j] = medians[j]
                continue
            order = np.lexsort((rank[cand], dist[cand]))[:k]
            est[i, j] = data.values[cand[order], j].mean()
    return BaselineResult(_finish(data, est))


def _observed_error(X, R, mask):
    diff = (X - R)[mask]
    return float(diff @ diff)


def impute_iterative_svd(data: DataMatrix, rank: int, max_iter: int = 100, tol: float = 1e-4) -> BaselineResult:
    """Mean fill, then alternate a rank-r truncated SVD with rewriting the missing cells."""
    _require_observed(data)
    scale = _scales(data)
    mask = data.mask
    X = data.values / scale
    means = np.array([X[mask[:, j], j].mean() for j in range(data.d)])
    cur = np.where(mask, X, means[None, :])
    Xobs = np.where(mask, X, 0.0)
    miss = ~mask
    objective, converged, it = [], False, 0
    for it in range(1, max_iter + 1):
        U, s, Vt = np.linalg.svd(cur, full_matrices=False)
        R = (U[:, :rank] * s[:rank]) @ Vt[:rank]
        objective.append(_observed_error(Xobs, R, mask))
        nxt = np.where(mask, X, R)
        change = float(np.mean(np.abs(nxt[miss] - cur[miss]))) if miss.any() else 0.0
        cur = nxt
        if change <= tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"iterative SVD did not converge in {max_iter} iterations", ConvergenceWarning)
    return BaselineResult(_finish(data, cur * scale), converged, it, objective)


def mf_objective(X, mask, U, V, l2) -> float:
    return _observed_error(np.where(mask, X, 0.0), U @ V.T, mask) + l2 * (float((U * U).sum()) + float((V * V).sum()))


def _als_half(X, mask, fixed, l2):
    """Solve every row of the free factor given the fixed one (ridge per row)."""
    r = fixed.shape[1]
    out = np.empty((X.shape[0], r))
    eye = l2 * np.eye(r)
    for i in range(X.shape[0]):
        F = fixed[mask[i]]
        out[i] = np.linalg.solve(F.T @ F + eye, F.T @ X[i, mask[i]]) if F.shape[0] else 0.0
    return out


def impute_matrix_factorization(data: DataMatrix, rank: int, l2: float = 0.1, max_iter: int = 200,
                                tol: float = 1e-6, seed: int = 0) -> BaselineResult:
    """Alternating least squares on the observed cells; missing cells get u_i . v_j.

    A nonzero ``seed`` jitters the starting factors slightly.
    """
    _require_observed(data)
    if l2 == 0:
        l2 = 1e-12
    scale = _scales(data)
    mask = data.mask
    X = np.where(mask, data.values / scale, 0.0)
    # start from the truncated SVD of the mean-filled matrix; random starts
    # land in poor local minima when l2 is small
    means = X.sum(axis=0) / mask.sum(axis=0)
    Us, s, Vt = np.linalg.svd(np.where(mask, X, means), full_matrices=False)
    root = np.sqrt(s[:rank])
    U = Us[:, :rank] * root
    V = Vt[:rank].T * root
    if seed:
        rng = np.random.default_rng(seed)
        U = U + rng.normal(0.0, 1e-6, U.shape)
    objective = [mf_objective(X, mask, U, V, l2)]
    converged, it = False, 0
    for it in range(1, max_iter + 1):
        U = _als_half(X, mask, V, l2)
        objective.append(mf_objective(X, mask, U, V, l2))
        V = _als_half(X.T, mask.T, U, l2)
        objective.append(mf_objective(X, mask, U, V, l2))
        prev = objective[-3]
        if prev - objective[-1] <= tol * max(prev, 1e-300):
            converged = True
            break
    if not converged:
        warnings.warn(f"matrix factorization did not converge in {max_iter} sweeps", ConvergenceWarning)
    return BaselineResult(_finish(data, (U @ V.T) * scale), converged, it, objective)


def run_baseline(data: DataMatrix, kind, seed: int = 0) -> BaselineResult:
    """Impute ``data`` with a baseline given as an object, a name or a dict."""
    if isinstance(kind, (str, dict)):
        kind = parse_baseline(kind)
    kind = kind.resolved(*data.shape)
    if isinstance(kind, Median):
        return impute_median(data)
    if isinstance(kind, KNN):
        return impute_knn(data, kind.k_neighbors)
    if isinstance(kind, IterativeSVD):
        return impute_iterative_svd(data, kind.rank, kind.max_iter, kind.tol)
    return impute_matrix_factorization(data, kind.rank, kind.l2, kind.max_iter, kind.tol, seed)


def impute_baseline(data: DataMatrix, kind, seed: int = 0) -> DataMatrix:
    return run_baseline(data, kind, seed).data
