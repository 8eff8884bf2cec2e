"""Brute-force k-nearest-neighbors classifier (Euclidean metric).

Distance ties are broken toward the lexicographically smallest account.
For k=1 the training set is deduplicated on (vector, label) pairs, which
leaves the set of candidate (distance, label) outcomes unchanged; this
matters on data where many records share one feature vector (e.g. the
account-creation-time fields).
"""

from __future__ import annotations

import numpy as np

from ..model import FeatureId, SampleSet, UserId
from .base import HyperParams, TrainedModel

# Cap the per-chunk distance matrix at ~32 MB of float64.
_CHUNK_CELLS = 4_000_000


class KnnModel(TrainedModel):
    algorithm = "knn"

    def __init__(
        self,
        classes: tuple[UserId, ...],
        combination: tuple[FeatureId, ...],
        X: np.ndarray,
        label_codes: np.ndarray,
        k: int,
        standardize: bool,
        mean: np.ndarray | None = None,
        scale: np.ndarray | None = None,
    ):
        self.classes = classes
        self.combination = combination
        self.X = X
        self.label_codes = label_codes
        self.k = k
        self.standardize = standardize
        self.mean = mean
        self.scale = scale
        self._dedup: tuple[np.ndarray, np.ndarray] | None = None

    def _transform(self, X: np.ndarray) -> np.ndarray:
        if self.standardize:
            return (X - self.mean) / self.scale
        return X

    def _dedup_view(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique (row, label) pairs sorted by label code ascending."""
        if self._dedup is None:
            stacked = np.column_stack(
                [self._transform(self.X), self.label_codes.astype(np.float64)]
            )
            unique = np.unique(stacked, axis=0)
            codes = unique[:, -1].astype(np.intp)
            order = np.argsort(codes, kind="stable")
            self._dedup = (np.ascontiguousarray(unique[order, :-1]), codes[order])
        return self._dedup

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = self._transform(self.check_query(X))
        if self.k == 1:
            return self._predict_nearest(X)
        return self._predict_vote(X)

    def _predict_nearest(self, Q: np.ndarray) -> np.ndarray:
        train, codes = self._dedup_view()
        # ||q - t||^2 = ||q||^2 + ||t||^2 - 2 q.t; the ||q||^2 term is
        # constant per query and dropped, keeping the argmin unchanged.
        t_norm = (train * train).sum(axis=1)
        out = np.zeros((Q.shape[0], len(self.classes)))
        chunk = max(1, _CHUNK_CELLS // max(1, train.shape[0]))
        for start in range(0, Q.shape[0], chunk):
            q = Q[start : start + chunk]
            scores = t_norm[None, :] - 2.0 * (q @ train.T)
            winners = codes[np.argmin(scores, axis=1)]
            out[np.arange(start, start + q.shape[0]), winners] = 1.0
        return out

    def _predict_vote(self, Q: np.ndarray) -> np.ndarray:
        train = self._transform(self.X)
        # store order is label-ascending, so a stable distance sort breaks
        # ties at the k-th boundary toward the smaller account
        order = np.argsort(self.label_codes, kind="stable")
        train = train[order]
        codes = self.label_codes[order]
        t_norm = (train * train).sum(axis=1)
        k = min(self.k, train.shape[0])
        out = np.zeros((Q.shape[0], len(self.classes)))
        chunk = max(1, _CHUNK_CELLS // max(1, train.shape[0]))
        for start in range(0, Q.shape[0], chunk):
            q = Q[start : start + chunk]
            scores = t_norm[None, :] - 2.0 * (q @ train.T)
            for i in range(q.shape[0]):
                nearest = np.argsort(scores[i], kind="stable")[:k]
                votes = np.bincount(codes[nearest], minlength=len(self.classes))
                out[start + i] = votes / k
        return out

    def state_dict(self) -> dict:
        return {
            "X": self.X.tolist(),
            "label_codes": self.label_codes.tolist(),
            "k": self.k,
            "standardize": self.standardize,
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
        }

    @classmethod
    def from_state(
        cls, classes: tuple[UserId, ...], combination: tuple[FeatureId, ...], state: dict
    ) -> "KnnModel":
        return cls(
            classes,
            combination,
            np.asarray(state["X"], dtype=np.float64),
            np.asarray(state["label_codes"], dtype=np.intp),
            int(state["k"]),
            bool(state["standardize"]),
            None if state["mean"] is None else np.asarray(state["mean"], dtype=np.float64),
            None if state["scale"] is None else np.asarray(state["scale"], dtype=np.float64),
        )


def train_knn(samples: SampleSet, params: HyperParams) -> KnnModel:
    mean = scale = None
    if params.knn_standardize:
        mean = samples.X.mean(axis=0)
        scale = samples.X.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
    return KnnModel(
        samples.classes,
        samples.combination,
        samples.X,
        samples.label_codes,
        params.knn_k,
        params.knn_standardize,
        mean,
        scale,
    )
