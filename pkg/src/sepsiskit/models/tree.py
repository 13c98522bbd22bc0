"""CART machinery shared by the forest and the boosted trees.

Split search delegates the hot boundary scan to sepsiskit._kernels
(compiled when available). Candidates are sorted canonically by
(value, label) / (value, grad, hess) before scanning, so fitted trees do
not depend on training-row order; cost ties resolve to the lowest feature
index, then the lowest threshold. Descent convention: x <= threshold goes
left.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DomainError


class TreeArrays:
    """Flat array encoding of a fitted binary tree.

    feature[i] == -1 marks a leaf; value[i] is the leaf payload
    (class-1 frequency for classification, additive weight for boosting).
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list = []
        self.threshold: list = []
        self.left: list = []
        self.right: list = []
        self.value: list = []

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        self.value = np.asarray(self.value, dtype=np.float64)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]

    def to_blob(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_blob(cls, blob: dict) -> "TreeArrays":
        t = cls()
        t.feature = blob["feature"]
        t.threshold = blob["threshold"]
        t.left = blob["left"]
        t.right = blob["right"]
        t.value = blob["value"]
        return t.finalize()


def _candidate_features(n_features: int, max_features, rng) -> np.ndarray:
    if max_features is None or max_features >= n_features:
        return np.arange(n_features)
    chosen = rng.choice(n_features, size=max_features, replace=False)
    return np.sort(chosen)


def grow_classification_tree(
    X,
    y,
    rng,
    max_depth=None,
    min_samples_leaf=1,
    max_features=None,
) -> TreeArrays:
    """Gini-split CART on 0/1 labels; leaf payload is the class-1 frequency.

    `rng` drives the per-node feature subsets (consumed in build order:
    depth-first, left child first).
    """
    n, d = X.shape
    tree = TreeArrays()
    root = tree.add_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ysub = y[idx]
        n_sub = idx.shape[0]
        n1 = int(ysub.sum())
        tree.value[node] = n1 / n_sub
        if n1 == 0 or n1 == n_sub:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if n_sub < 2 * min_samples_leaf:
            continue
        best = None  # (cost, feature, threshold)
        for f in _candidate_features(d, max_features, rng):
            xs = X[idx, f]
            order = np.lexsort((ysub, xs))
            found = _kernels.scan_gini(
                np.ascontiguousarray(xs[order]),
                np.ascontiguousarray(ysub[order]),
                min_samples_leaf,
            )
            if found is None:
                continue
            cost, thr, _ = found
            if best is None or cost < best[0]:
                best = (cost, int(f), thr)
        if best is None:
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        left_node = tree.add_node()
        right_node = tree.add_node()
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = left_node
        tree.right[node] = right_node
        stack.append((right_node, idx[~go_left], depth + 1))
        stack.append((left_node, idx[go_left], depth + 1))
    return tree.finalize()


def grow_gradient_tree(
    X,
    g,
    h,
    reg_lambda=1.0,
    gamma=0.0,
    max_depth=3,
    min_samples_leaf=1,
    min_child_weight=1e-3,
) -> TreeArrays:
    """Regression tree on (grad, hess) with second-order gain splits.

    Leaf payload is the additive weight -G/(H+lambda). A node splits only
    when 0.5*(score_split - score_node) - gamma > 0. Node G/H statistics
    come from the winning feature's canonical accumulation, so the fit is
    independent of row order.
    """
    if max_depth is None:
        raise DomainError("boosted trees require a finite max_depth")
    n, d = X.shape
    tree = TreeArrays()
    root = tree.add_node()
    order0 = np.lexsort((h, g))
    g_root = float(np.cumsum(g[order0])[-1]) if n else 0.0
    h_root = float(np.cumsum(h[order0])[-1]) if n else 0.0
    stack = [(root, np.arange(n), 0, g_root, h_root)]
    while stack:
        node, idx, depth, g_node, h_node = stack.pop()
        tree.value[node] = -g_node / (h_node + reg_lambda)
        if depth >= max_depth or idx.shape[0] < 2 * min_samples_leaf:
            continue
        parent_score = g_node * g_node / (h_node + reg_lambda)
        best = None  # (score, feature, threshold, gl, hl)
        gsub = g[idx]
        hsub = h[idx]
        for f in range(d):
            xs = X[idx, f]
            order = np.lexsort((hsub, gsub, xs))
            found = _kernels.scan_grad(
                np.ascontiguousarray(xs[order]),
                np.ascontiguousarray(gsub[order]),
                np.ascontiguousarray(hsub[order]),
                reg_lambda,
                min_samples_leaf,
                min_child_weight,
            )
            if found is None:
                continue
            score, thr, n_left, gl, hl = found
            if best is None or score > best[0]:
                best = (score, f, thr, gl, hl)
        if best is None:
            continue
        score, f, thr, gl, hl = best
        gain = 0.5 * (score - parent_score) - gamma
        if gain <= 0.0:
            continue
        go_left = X[idx, f] <= thr
        left_node = tree.add_node()
        right_node = tree.add_node()
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = left_node
        tree.right[node] = right_node
        stack.append((right_node, idx[~go_left], depth + 1, g_node - gl, h_node - hl))
        stack.append((left_node, idx[go_left], depth + 1, gl, hl))
    return tree.finalize()
