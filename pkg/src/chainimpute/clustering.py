"""k-means, silhouette-based choice of k, and cluster-feature infusion.

Cluster labels are 0-based.  Three ways of turning a row's cluster into extra
predictor columns are supported: the label itself, its binary code on
``ceil(log2 k)`` bits (most significant bit first), and the squared norm of
the cluster centroid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ShapeError

MAX_ITER = 300


class InfusionMethod(str, Enum):
    LABEL = "label"
    BINARY = "binary"
    MCMV = "mcmv"

    @classmethod
    def parse(cls, value) -> "InfusionMethod":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "-")
        if v in ("one-hot", "onehot", "binary-encoded", "binaryencoded"):
            v = "binary"
        try:
            return cls(v)
        except ValueError:
            raise ConfigurationError(f"unknown infusion method {value!r}") from None

    def n_columns(self, k: int) -> int:
        return n_bits(k) if self is InfusionMethod.BINARY else 1


def n_bits(k: int) -> int:
    if k < 2:
        raise ConfigurationError(f"cluster infusion needs k >= 2, got {k}")
    return math.ceil(math.log2(k))


@dataclass(eq=False)
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    sse_trace: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def assign(self, X) -> np.ndarray:
        return assign_nearest(X, self.centroids)

    def to_dict(self):
        return {"centroids": self.centroids.tolist(), "sse": self.sse}

    @classmethod
    def from_dict(cls, d):
        c = np.array(d["centroids"], dtype=np.float64)
        return cls(c, np.zeros(0, dtype=np.int64), d["sse"])


def _sq_dists(X, C):
    d = (X * X).sum(axis=1)[:, None] - 2.0 * X @ C.T + (C * C).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def assign_nearest(X, centroids) -> np.ndarray:
    """Index of the closest centroid (squared Euclidean), lowest index on ties."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != centroids.shape[1]:
        raise ShapeError(f"rows have {X.shape[1]} columns, centroids {centroids.shape[1]}")
    return np.argmin(_sq_dists(X, centroids), axis=1)


def compute_sse(X, centroids, assignments) -> float:
    diff = X - centroids[assignments]
    return float((diff * diff).sum())


def _plusplus_init(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def kmeans(X, k: int, seed: int = 0, max_iter: int = MAX_ITER) -> ClusterModel:
    """Lloyd iterations from k-means++ seeding until the assignment stops changing."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 2:
        raise ConfigurationError(f"k must be >= 2, got {k}")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of rows n={n}")
    if not np.isfinite(X).all():
        raise ShapeError("k-means input must be complete and finite")
    rng = np.random.default_rng(seed)
    C = _plusplus_init(X, k, rng)
    labels = assign_nearest(X, C)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        for p in range(k):
            members = labels == p
            if members.any():
                C[p] = X[members].mean(axis=0)
        dist = ((X - C[labels]) ** 2).sum(axis=1)
        for p in range(k):
            if not (labels == p).any() and dist.max() > 0:
                # reseed an empty cluster at the worst-fit point
                far = int(np.argmax(dist))
                C[p] = X[far]
                labels[far] = p
                dist[far] = 0.0
        new = assign_nearest(X, C)
        trace.append(compute_sse(X, C, new))
        if np.array_equal(new, labels):
            break
        labels = new
    labels = assign_nearest(X, C)
    return ClusterModel(C, labels, compute_sse(X, C, labels), trace, it)


def silhouette_score(X, labels) -> float:
    """Mean silhouette coefficient; singleton clusters and zero-spread points score 0."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    uniq, codes = np.unique(labels, return_inverse=True)
    if uniq.size < 2:
        return 0.0
    n = X.shape[0]
    counts = np.bincount(codes, minlength=uniq.size).astype(np.float64)
    sq = (X * X).sum(axis=1)
    s = np.empty(n)
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        d = np.sqrt(np.maximum(sq[start:stop, None] - 2.0 * X[start:stop] @ X.T + sq[None, :], 0.0))
        d[np.arange(stop - start), np.arange(start, stop)] = 0.0
        sums = np.zeros((stop - start, uniq.size))
        for c in range(uniq.size):
            sums[:, c] = d[:, codes == c].sum(axis=1)
        own = codes[start:stop]
        own_n = counts[own]
        a = np.where(own_n > 1, sums[np.arange(stop - start), own] / np.maximum(own_n - 1, 1), 0.0)
        mean_other = sums / counts[None, :]
        mean_other[np.arange(stop - start), own] = np.inf
        b = mean_other.min(axis=1)
        denom = np.maximum(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(denom > 0, (b - a) / denom, 0.0)
        s[start:stop] = np.where(own_n > 1, val, 0.0)
    return float(s.mean())


def select_k(X, k_candidates, seed: int = 0) -> int:
    """k with the highest mean silhouette; scores within 1e-12 go to the smaller k."""
    cands = sorted(set(int(k) for k in k_candidates))
    if not cands:
        raise ConfigurationError("empty candidate set for k")
    n = np.asarray(X).shape[0]
    if cands[0] < 2 or cands[-1] > n - 1:
        raise ConfigurationError(f"candidates must lie in [2, {n - 1}]")
    best_k, best = cands[0], -np.inf
    for k in cands:
        score = silhouette_score(X, kmeans(X, k, seed).assignments)
        if score > best + 1e-12:
            best_k, best = k, score
    return best_k


def infusion_columns(labels, method, centroids) -> np.ndarray:
    """The extra predictor columns for rows with the given cluster labels."""
    method = InfusionMethod.parse(method)
    labels = np.asarray(labels, dtype=np.int64)
    k = centroids.shape[0]
    if method is InfusionMethod.LABEL:
        n_bits(k)
        return labels.astype(np.float64)[:, None]
    if method is InfusionMethod.BINARY:
        nb = n_bits(k)
        shifts = np.arange(nb - 1, -1, -1)
        return ((labels[:, None] >> shifts[None, :]) & 1).astype(np.float64)
    n_bits(k)
    magnitude = (centroids * centroids).sum(axis=1)
    return magnitude[labels][:, None]


def infuse(X, model: ClusterModel, method) -> np.ndarray:
    """``X`` with the cluster columns of ``model.assignments`` appended on the right."""
    X = np.asarray(X, dtype=np.float64)
    if model.assignments.shape[0] != X.shape[0]:
        raise ShapeError("assignments must cover every row")
    return np.hstack([X, infusion_columns(model.assignments, method, model.centroids)])
