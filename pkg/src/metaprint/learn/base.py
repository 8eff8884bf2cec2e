"""Shared classifier interface: hyperparameters, prediction vectors, base model."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
import numpy as np

from ..errors import ShapeError, UnknownClassError
from ..model import FeatureId, UserId

ALGORITHMS = ("knn", "rf", "mlr")


@dataclass(frozen=True)
class HyperParams:
    """Classifier configuration; defaults are the tuned reference setup."""

    algorithm: str = "knn"
    knn_k: int = 1
    knn_standardize: bool = False
    rf_trees: int = 10
    rf_split: str = "entropy"
    mlr_l2: float = 1.0
    mlr_tol: float = 1e-4
    mlr_max_iter: int = 100
    lbfgs_memory: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.rf_trees < 1:
            raise ValueError("rf_trees must be >= 1")
        if self.rf_split != "entropy":
            raise ValueError("rf_split supports only 'entropy'")
        if self.mlr_l2 < 0:
            raise ValueError("mlr_l2 must be >= 0")
        if self.mlr_tol <= 0:
            raise ValueError("mlr_tol must be > 0")
        if self.mlr_max_iter < 1:
            raise ValueError("mlr_max_iter must be >= 1")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs_memory must be >= 1")


@dataclass(frozen=True, eq=False)
class PredictionVector:
    """Class probabilities over the model's identity set.

    `classes` is lexicographically sorted, so the first argmax index is
    already the lexicographic tie-break winner.
    """

    classes: tuple[UserId, ...]
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (len(self.classes),):
            raise ShapeError("probability vector length does not match the class list")
        if (p < 0).any():
            raise ShapeError("probabilities must be non-negative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ShapeError(f"probabilities must sum to 1, got {float(p.sum())!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def top_class(self) -> UserId:
        return self.classes[int(np.argmax(self.probabilities))]


class TrainedModel(ABC):
    """A fitted classifier; immutable, prediction never mutates state."""

    algorithm: str
    classes: tuple[UserId, ...]
    combination: tuple[FeatureId, ...]

    @abstractmethod
    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        """Row-wise class probabilities for a (queries, features) matrix."""

    @abstractmethod
    def state_dict(self) -> dict:
        """JSON-serializable fitted state (arrays as nested lists)."""

    def check_query(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.combination):
            raise ShapeError(
                f"query matrix of shape {X.shape} does not match the "
                f"{len(self.combination)}-feature training combination"
            )
        return X

    def classify_batch(self, X: np.ndarray) -> np.ndarray:
        """Argmax label codes; first-max wins, i.e. lexicographic tie-break."""
        return np.argmax(self.predict_proba_matrix(X), axis=1)


def rank_of_truth(P: np.ndarray, truth_codes: np.ndarray) -> np.ndarray:
    """0-based rank of the true class per row, under the ordering
    (probability descending, class ascending)."""
    rows = np.arange(P.shape[0])
    p_true = P[rows, truth_codes]
    greater = (P > p_true[:, None]).sum(axis=1)
    cols = np.arange(P.shape[1])[None, :]
    tied_before = ((P == p_true[:, None]) & (cols < truth_codes[:, None])).sum(axis=1)
    return greater + tied_before


def top_k_hit(prediction: PredictionVector, truth: UserId, k: int) -> bool:
    """True iff `truth` ranks among the k most probable classes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(prediction.classes):
        raise ValueError(f"k={k} exceeds the identity set size {len(prediction.classes)}")
    try:
        code = prediction.classes.index(truth)
    except ValueError:
        raise UnknownClassError(f"{truth!r} is not in the model's identity set")
    P = prediction.probabilities[None, :]
    return bool(rank_of_truth(P, np.array([code]))[0] < k)
