"""Random forest: entropy-split decision trees on bootstrap resamples.

Trees are grown to purity (or until no feature admits a valid split),
with ceil(sqrt(d)) candidate features per node. Split search runs a
vectorized incremental entropy scan over each candidate column: moving
one sample at a time from the right child to the left child updates
sum(c * log2 c) in O(1) per step via a precomputed k*log2(k) table, so a
node costs O(n log n) per candidate feature regardless of class count.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from ..model import FeatureId, SampleSet, UserId
from ..seeding import rng
from .base import HyperParams, TrainedModel


def node_entropy(labels: Iterable) -> float:
    """Shannon entropy (bits) of the empirical label distribution."""
    counts = np.array(list(Counter(labels).values()), dtype=np.float64)
    if counts.size == 0:
        raise ValueError("entropy of an empty label multiset is undefined")
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _xlog2x_table(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        table = k * np.log2(k)
    table[0] = 0.0
    return table


def _best_split(x: np.ndarray, y: np.ndarray, F: np.ndarray) -> tuple[float, float] | None:
    """Best threshold on one column, or None if all values are equal.

    Returns (cost, threshold) where cost = nl*H(left) + nr*H(right) in
    bits-weighted form; minimizing it maximizes information gain.
    """
    n = len(y)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if xs[0] == xs[-1]:
        return None
    ys = y[order]

    ord2 = np.argsort(ys, kind="stable")
    ys_sorted = ys[ord2]
    starts = np.flatnonzero(np.r_[True, ys_sorted[1:] != ys_sorted[:-1]])
    lens = np.diff(np.r_[starts, n])
    within = np.arange(n) - np.repeat(starts, lens)
    occ = np.empty(n, dtype=np.int64)
    occ[ord2] = within + 1
    tot = np.empty(n, dtype=np.int64)
    tot[ord2] = np.repeat(lens, lens)

    s_total = F[lens].sum()
    SL = np.cumsum(F[occ] - F[occ - 1])
    SR = s_total + np.cumsum(F[tot - occ] - F[tot - occ + 1])

    nl = np.arange(1, n)
    cost = (F[nl] - SL[:-1]) + (F[n - nl] - SR[:-1])
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    j = int(np.argmin(cost))
    threshold = 0.5 * (xs[j] + xs[j + 1])
    if threshold >= xs[j + 1]:  # midpoint rounded up to the right value
        threshold = float(xs[j])
    return float(cost[j]), float(threshold)


class DecisionTree:
    """Flat-array decision tree; `feature[i] == -1` marks a leaf."""

    def __init__(
        self,
        feature: np.ndarray,
        threshold: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
        leaf_codes: list[np.ndarray | None],
        leaf_counts: list[np.ndarray | None],
    ):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.leaf_codes = leaf_codes
        self.leaf_counts = leaf_counts

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id per query row (routing rule: x <= threshold -> left)."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return node
            rows = np.flatnonzero(internal)
            at = node[rows]
            go_left = X[rows, self.feature[at]] <= self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])

    def predict_proba(self, X: np.ndarray, n_classes: int) -> np.ndarray:
        leaves = self.apply(X)
        out = np.zeros((X.shape[0], n_classes))
        for leaf in np.unique(leaves):
            codes = self.leaf_codes[leaf]
            counts = self.leaf_counts[leaf]
            rows = np.flatnonzero(leaves == leaf)
            out[np.ix_(rows, codes)] = counts / counts.sum()
        return out

    def state_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_codes": [[] if c is None else c.tolist() for c in self.leaf_codes],
            "leaf_counts": [[] if c is None else c.tolist() for c in self.leaf_counts],
        }

    @classmethod
    def from_state(cls, state: dict) -> "DecisionTree":
        return cls(
            np.asarray(state["feature"], dtype=np.int64),
            np.asarray(state["threshold"], dtype=np.float64),
            np.asarray(state["left"], dtype=np.int64),
            np.asarray(state["right"], dtype=np.int64),
            [np.asarray(c, dtype=np.int64) if c else None for c in state["leaf_codes"]],
            [np.asarray(c, dtype=np.int64) if c else None for c in state["leaf_counts"]],
        )


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, generator: np.random.Generator) -> DecisionTree:
    n, d = X.shape
    F = _xlog2x_table(n)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_codes: list[np.ndarray | None] = []
    leaf_counts: list[np.ndarray | None] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_codes.append(None)
        leaf_counts.append(None)
        return len(feature) - 1

    root = new_node()
    stack: list[tuple[np.ndarray, int]] = [(np.arange(n), root)]
    while stack:
        idx, node = stack.pop()
        labels = y[idx]
        if labels.size == 1 or (labels == labels[0]).all():
            codes, counts = np.unique(labels, return_counts=True)
            leaf_codes[node] = codes
            leaf_counts[node] = counts
            continue
        perm = generator.permutation(d)
        best: tuple[float, float, int] | None = None
        for f in perm[:mtry]:
            found = _best_split(X[idx, f], labels, F)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], int(f))
        if best is None:
            # the sampled subset was constant on this node; widen to the rest
            for f in perm[mtry:]:
                found = _best_split(X[idx, f], labels, F)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], found[1], int(f))
        if best is None:
            codes, counts = np.unique(labels, return_counts=True)
            leaf_codes[node] = codes
            leaf_counts[node] = counts
            continue
        _, thr, f = best
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left_id = new_node()
        right_id = new_node()
        left[node] = left_id
        right[node] = right_id
        # push right first so the left child is grown first (fixed rng order)
        stack.append((idx[~go_left], right_id))
        stack.append((idx[go_left], left_id))

    return DecisionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        leaf_codes,
        leaf_counts,
    )


class ForestModel(TrainedModel):
    algorithm = "rf"

    def __init__(
        self,
        classes: tuple[UserId, ...],
        combination: tuple[FeatureId, ...],
        trees: Sequence[DecisionTree],
    ):
        self.classes = classes
        self.combination = combination
        self.trees = tuple(trees)

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = self.check_query(X)
        out = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            out += tree.predict_proba(X, len(self.classes))
        out /= len(self.trees)
        return out

    def state_dict(self) -> dict:
        return {"trees": [t.state_dict() for t in self.trees]}

    @classmethod
    def from_state(
        cls, classes: tuple[UserId, ...], combination: tuple[FeatureId, ...], state: dict
    ) -> "ForestModel":
        return cls(classes, combination, [DecisionTree.from_state(s) for s in state["trees"]])


def train_forest(samples: SampleSet, params: HyperParams) -> ForestModel:
    n, d = samples.X.shape
    mtry = math.ceil(math.sqrt(d))
    trees = []
    for t in range(params.rf_trees):
        g = rng(params.seed, "tree", t)
        bootstrap = g.integers(0, n, size=n)
        trees.append(grow_tree(samples.X[bootstrap], samples.label_codes[bootstrap], mtry, g))
    return ForestModel(samples.classes, samples.combination, trees)
