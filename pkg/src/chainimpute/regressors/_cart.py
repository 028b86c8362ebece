"""Weighted CART growth shared by regression trees, forests, boosting and the classifier.

Targets are an ``(n, k)`` matrix: one column for regression, one-hot class
indicators for classification.  Both cases maximize
``sum_k S_L^2/N_L + S_R^2/N_R`` (variance reduction / Gini gain), so a single
split search serves both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(eq=False)
class Tree:
    feature: np.ndarray     # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray       # (n_nodes, k)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row; ``x <= threshold`` goes left."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
        )


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature ascending row order, shape ``(p, n)``; reusable across trees on the same X."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)


@njit(cache=True, nogil=True)
def _best_split(ordn, feats, Xt, Yw, w, W, S, min_leaf):
    """Scan every candidate threshold of every feature in ``feats``.

    Returns (gain, feature, position); feature is -1 when no valid split exists.
    Strict improvement keeps the lowest feature and then the lowest threshold on ties.
    """
    k = Yw.shape[1]
    m = ordn.shape[1]
    best = -np.inf
    best_f = -1
    best_pos = -1
    SL = np.empty(k)
    for f in feats:
        SL[:] = 0.0
        NL = 0.0
        row = ordn[f]
        for i in range(m - 1):
            r = row[i]
            NL += w[r]
            for c in range(k):
                SL[c] += Yw[r, c]
            if not Xt[f, r] < Xt[f, row[i + 1]]:
                continue
            NR = W - NL
            if NL < min_leaf or NR < min_leaf:
                continue
            g = 0.0
            for c in range(k):
                sr = S[c] - SL[c]
                g += SL[c] * SL[c] / NL + sr * sr / NR
            if g > best:
                best = g
                best_f = f
                best_pos = i
    return best, best_f, best_pos


@njit(cache=True, nogil=True)
def _partition(ordn, goes_left, n_left):
    p, m = ordn.shape
    lo = np.empty((p, n_left), dtype=ordn.dtype)
    hi = np.empty((p, m - n_left), dtype=ordn.dtype)
    for f in range(p):
        a = 0
        b = 0
        for i in range(m):
            r = ordn[f, i]
            if goes_left[r]:
                lo[f, a] = r
                a += 1
            else:
                hi[f, b] = r
                b += 1
    return lo, hi


def grow_tree(
    X: np.ndarray,
    Y: np.ndarray,
    weights: np.ndarray | None = None,
    *,
    max_depth: int,
    min_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    order: np.ndarray | None = None,
) -> Tree:
    """Grow one tree greedily, depth-first.

    ``weights`` are non-negative row multiplicities (bootstrap counts); rows of
    weight zero never reach a node.  ``order`` is an optional :func:`presort`
    of ``X``.  Split ties resolve to the lowest feature index, then the lowest
    threshold.
    """
    n, p = X.shape
    Y = np.asarray(Y, dtype=np.float64).reshape(n, -1)
    k = Y.shape[1]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if order is None:
        order = presort(X)
    if weights is not None and not (w > 0).all():
        order = order[w[order] > 0].reshape(p, -1)
    Xt = np.ascontiguousarray(X.T, dtype=np.float64)
    Yw = np.ascontiguousarray(Y * w[:, None])
    all_features = np.arange(p)
    mf = p if max_features is None else max(1, min(p, int(max_features)))

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(Yw[rows].sum(axis=0) / w[rows].sum())
        return len(feature) - 1

    goes_left = np.zeros(n, dtype=np.bool_)
    root = new_node(order[0])
    stack = [(root, order, 0)]
    while stack:
        node, ordn, depth = stack.pop()
        m = ordn.shape[1]
        if m < 2:
            continue
        rows = ordn[0]
        wn = w[rows]
        W = float(wn.sum())
        if W < 2 * min_leaf:
            continue
        S = Yw[rows].sum(axis=0)
        sq = float((Y[rows] ** 2 * wn[:, None]).sum())
        parent = float((S * S).sum()) / W
        sse = sq - parent
        if sse <= 1e-12 * max(sq, 1e-300):
            continue

        feats = all_features if mf >= p else np.sort(rng.choice(p, size=mf, replace=False))
        gain, f, pos = _best_split(ordn, feats, Xt, Yw, w, W, S, float(min_leaf))
        if f < 0 or not gain - parent > 1e-12 * sse:
            continue
        lo, hi = Xt[f, ordn[f, pos]], Xt[f, ordn[f, pos + 1]]
        thr = lo + (hi - lo) / 2.0
        if not (lo <= thr < hi):
            thr = lo

        feature[node] = int(f)
        threshold[node] = float(thr)
        to_left = Xt[f, rows] <= thr
        if depth + 1 >= max_depth:
            left[node] = new_node(rows[to_left])
            right[node] = new_node(rows[~to_left])
            continue
        goes_left[rows] = to_left
        left_ord, right_ord = _partition(ordn, goes_left, int(to_left.sum()))
        goes_left[rows] = False
        li = new_node(left_ord[0])
        ri = new_node(right_ord[0])
        left[node] = li
        right[node] = ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, right_ord, depth + 1))
        stack.append((li, left_ord, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64).reshape(len(feature), k),
    )
