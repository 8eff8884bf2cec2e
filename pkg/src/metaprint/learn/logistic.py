"""Multinomial logistic regression trained with the L-BFGS minimizer.

The weight matrix has shape (classes, features + 1); the trailing column
is the bias and is excluded from the L2 penalty. The objective is the
summed negative log-likelihood of the softmax model plus (l2/2)*||W||^2,
evaluated with log-sum-exp stabilization throughout.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from ..errors import NumericError, ShapeError
from ..model import FeatureId, LabeledSample, SampleSet, UserId
from .base import HyperParams, TrainedModel
from .lbfgs import minimize_lbfgs


def _augment(X: np.ndarray) -> np.ndarray:
    return np.column_stack([X, np.ones(X.shape[0])])


def _log_softmax(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-stabilized (probabilities, log-sum-exp) for a score matrix."""
    m = scores.max(axis=1, keepdims=True)
    shifted = np.exp(scores - m)
    z = shifted.sum(axis=1, keepdims=True)
    return shifted / z, (m + np.log(z)).ravel()


def _class_sums(Xa: np.ndarray, y: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class row sums of Xa: the constant -Y^T Xa gradient term."""
    order = np.argsort(y, kind="stable")
    ys = y[order]
    starts = np.flatnonzero(np.r_[True, ys[1:] != ys[:-1]])
    sums = np.add.reduceat(Xa[order], starts, axis=0)
    out = np.zeros((n_classes, Xa.shape[1]))
    out[ys[starts]] = sums
    return out


def _objective_and_gradient(
    W: np.ndarray,
    Xa: np.ndarray,
    y: np.ndarray,
    l2: float,
    class_sums: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    if not np.isfinite(W).all():
        raise NumericError("non-finite values in the weight matrix")
    scores = Xa @ W.T
    P, lse = _log_softmax(scores)
    nll = float(lse.sum() - scores[np.arange(len(y)), y].sum())
    penalty = 0.5 * l2 * float((W[:, :-1] ** 2).sum())
    if class_sums is None:
        class_sums = _class_sums(Xa, y, W.shape[0])
    G = P.T @ Xa - class_sums
    G[:, :-1] += l2 * W[:, :-1]
    return nll + penalty, G


def _as_sample_set(samples: SampleSet | Sequence[LabeledSample]) -> SampleSet:
    if isinstance(samples, SampleSet):
        return samples
    return SampleSet.from_samples(samples)


def mlr_objective_and_gradient(
    W: np.ndarray, samples: SampleSet | Sequence[LabeledSample], l2: float
) -> tuple[float, np.ndarray]:
    """Penalized negative log-likelihood and its exact gradient.

    `W` must be (|classes|, n_features + 1); the last column is the
    unpenalized bias.
    """
    ss = _as_sample_set(samples)
    W = np.asarray(W, dtype=np.float64)
    expected = (len(ss.classes), len(ss.combination) + 1)
    if W.shape != expected:
        raise ShapeError(f"weight matrix must have shape {expected}, got {W.shape}")
    return _objective_and_gradient(W, _augment(ss.X), ss.label_codes, float(l2))


class MlrModel(TrainedModel):
    algorithm = "mlr"

    def __init__(
        self,
        classes: tuple[UserId, ...],
        combination: tuple[FeatureId, ...],
        W: np.ndarray,
        converged: bool,
        iterations: int,
    ):
        self.classes = classes
        self.combination = combination
        self.W = W
        self.converged = converged
        self.iterations = iterations

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = self.check_query(X)
        P, _ = _log_softmax(_augment(X) @ self.W.T)
        return P

    def state_dict(self) -> dict:
        return {
            "W": self.W.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_state(
        cls, classes: tuple[UserId, ...], combination: tuple[FeatureId, ...], state: dict
    ) -> "MlrModel":
        return cls(
            classes,
            combination,
            np.asarray(state["W"], dtype=np.float64),
            bool(state["converged"]),
            int(state["iterations"]),
        )


def train_mlr(samples: SampleSet, params: HyperParams) -> MlrModel:
    Xa = _augment(samples.X)
    y = samples.label_codes
    K = len(samples.classes)
    sums = _class_sums(Xa, y, K)
    shape = (K, Xa.shape[1])

    def fun_and_grad(w_flat: np.ndarray) -> tuple[float, np.ndarray]:
        value, G = _objective_and_gradient(
            w_flat.reshape(shape), Xa, y, params.mlr_l2, class_sums=sums
        )
        return value, G.ravel()

    result = minimize_lbfgs(
        fun_and_grad,
        np.zeros(shape).ravel(),
        memory=params.lbfgs_memory,
        grad_tol=params.mlr_tol,
        max_iter=params.mlr_max_iter,
    )
    if not result.converged:
        warnings.warn(
            f"MLR did not reach gradient tolerance {params.mlr_tol} within "
            f"{params.mlr_max_iter} iterations (max-abs gradient {result.grad_norm:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return MlrModel(
        samples.classes,
        samples.combination,
        result.x.reshape(shape),
        result.converged,
        result.iterations,
    )
