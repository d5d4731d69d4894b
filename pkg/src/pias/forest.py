"""Bagged multi-output regression trees.

Split criterion is the summed per-output variance reduction, computed
by a prefix-sum scan over each candidate feature's sorted column.  Leaf
prediction is the per-output mean.  Candidate features are drawn per
split; candidates are scanned in ascending index order and improvements
must be strict, so fits are reproducible for a fixed seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .seeding import rng_from


@dataclass(frozen=True, eq=False)
class _Tree:
    feat: np.ndarray     # split feature per node, -1 at leaves
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    values: np.ndarray   # (n_nodes, q) leaf means

    def predict(self, X: np.ndarray) -> np.ndarray:
        return kernels.tree_predict(self.feat, self.thr, self.left,
                                    self.right, self.values,
                                    np.ascontiguousarray(X))


def _grow_tree(X, Y, rng, min_leaf: int, mtry: int) -> _Tree:
    n, p = X.shape
    feat, thr, left, right, values = [], [], [], [], []

    def new_node():
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        values.append(None)
        return len(feat) - 1

    root = new_node()
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        Yn = Y[idx]
        values[node] = Yn.mean(axis=0)
        if idx.shape[0] < 2 * min_leaf:
            continue
        if np.all(Yn == Yn[0]):
            continue
        cand = np.sort(rng.permutation(p)[:mtry])
        best_gain = -1.0
        best = None
        for f in cand:
            col = X[idx, f]
            order = np.argsort(col, kind="mergesort")
            xs = np.ascontiguousarray(col[order])
            gain, pos = kernels.split_scan(xs, np.ascontiguousarray(Yn[order]),
                                           min_leaf)
            if pos >= 0 and gain > best_gain:
                best_gain = gain
                best = (f, idx[order], xs, pos)
        if best is None:
            continue
        f, sorted_idx, xs, pos = best
        cut = 0.5 * (xs[pos - 1] + xs[pos])
        li = new_node()
        ri = new_node()
        feat[node] = int(f)
        thr[node] = float(cut)
        left[node] = li
        right[node] = ri
        stack.append((ri, sorted_idx[pos:]))
        stack.append((li, sorted_idx[:pos]))

    q = Y.shape[1]
    vals = np.zeros((len(feat), q))
    for i, v in enumerate(values):
        if v is not None:
            vals[i] = v
    return _Tree(
        feat=np.asarray(feat, dtype=np.int64),
        thr=np.asarray(thr, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        values=vals,
    )


class MultiOutputForest:
    """Random forest regressor predicting a vector per row.

    Parameters
    ----------
    n_trees : ensemble size.
    min_leaf : minimum rows per leaf.
    bootstrap : sample rows with replacement per tree.
    max_features : "sqrt" for ceil(sqrt(p)) candidates per split, None
        for all features, or an explicit count.
    seed : reproducibility seed for bootstraps and feature draws.
    """

    def __init__(self, n_trees: int = 100, min_leaf: int = 2,
                 bootstrap: bool = True, max_features="sqrt", seed: int = 0):
        if n_trees < 1 or min_leaf < 1:
            raise ValueError("n_trees and min_leaf must be >= 1")
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.seed = seed
        self._trees = None
        self._q = None

    def _mtry(self, p: int) -> int:
        if self.max_features is None:
            return p
        if self.max_features == "sqrt":
            return min(p, max(1, math.ceil(math.sqrt(p))))
        return min(p, max(1, int(self.max_features)))

    def fit(self, X: np.ndarray, Y: np.ndarray) -> "MultiOutputForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, np.newaxis]
        if X.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise ValueError("X must be (n, p) and Y (n, q) with matching n")
        n, p = X.shape
        mtry = self._mtry(p)
        rng = rng_from(self.seed, "forest")
        trees = []
        for _ in range(self.n_trees):
            if self.bootstrap:
                rows = rng.integers(0, n, size=n)
                trees.append(_grow_tree(X[rows], Y[rows], rng,
                                        self.min_leaf, mtry))
            else:
                trees.append(_grow_tree(X, Y, rng, self.min_leaf, mtry))
        self._trees = trees
        self._q = Y.shape[1]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self._trees is None:
            raise RuntimeError("fit before predict")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        acc = np.zeros((X.shape[0], self._q))
        for t in self._trees:
            acc += t.predict(X)
        return acc / self.n_trees
