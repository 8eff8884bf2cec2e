"""Uniform train/predict interface over the three classifiers.

All three algorithms emit a probability vector over the closed identity
set fixed at training time (the lexicographically sorted distinct
training labels); argmax with lexicographic tie-break assigns the
identity.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from ..model import (
    FeatureVector,
    LabeledSample,
    SampleSet,
    UserId,
    combination_from_names,
)
from .base import (
    ALGORITHMS,
    HyperParams,
    PredictionVector,
    TrainedModel,
    rank_of_truth,
    top_k_hit,
)
from .forest import ForestModel, node_entropy, train_forest
from .knn import KnnModel, train_knn
from .lbfgs import LbfgsResult, minimize_lbfgs
from .logistic import MlrModel, mlr_objective_and_gradient, train_mlr

__all__ = [
    "ALGORITHMS",
    "HyperParams",
    "PredictionVector",
    "TrainedModel",
    "KnnModel",
    "ForestModel",
    "MlrModel",
    "LbfgsResult",
    "train",
    "predict_proba",
    "classify",
    "top_k_hit",
    "rank_of_truth",
    "node_entropy",
    "mlr_objective_and_gradient",
    "minimize_lbfgs",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
]

_TRAINERS = {"knn": train_knn, "rf": train_forest, "mlr": train_mlr}
_MODEL_TYPES = {"knn": KnnModel, "rf": ForestModel, "mlr": MlrModel}

_MODEL_FORMAT = "metaprint-model"
_MODEL_FORMAT_VERSION = 1


def train(
    samples: SampleSet | Sequence[LabeledSample], params: HyperParams
) -> TrainedModel:
    """Fit the configured classifier on labeled samples.

    All samples must share one feature combination; the model's identity
    set is the sorted distinct labels.
    """
    if not isinstance(samples, SampleSet):
        samples = SampleSet.from_samples(samples)
    if len(samples) == 0:
        raise ShapeError("cannot train on zero samples")
    return _TRAINERS[params.algorithm](samples, params)


def _query_row(model: TrainedModel, features: FeatureVector) -> np.ndarray:
    if features.combination != model.combination:
        raise ShapeError(
            f"feature combination {[f.value for f in features.combination]} does not "
            f"match the training combination {[f.value for f in model.combination]}"
        )
    return np.asarray(features.values, dtype=np.float64)[None, :]


def predict_proba(model: TrainedModel, features: FeatureVector) -> PredictionVector:
    """Class-probability vector for one observation."""
    P = model.predict_proba_matrix(_query_row(model, features))
    return PredictionVector(model.classes, P[0])


def classify(model: TrainedModel, features: FeatureVector) -> UserId:
    """Identity with the highest probability (lexicographic tie-break)."""
    P = model.predict_proba_matrix(_query_row(model, features))
    return model.classes[int(np.argmax(P[0]))]


def model_to_dict(model: TrainedModel, params: HyperParams | None = None) -> dict:
    return {
        "format": _MODEL_FORMAT,
        "format_version": _MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "classes": list(model.classes),
        "combination": [f.value for f in model.combination],
        "hyperparams": None if params is None else asdict(params),
        "state": model.state_dict(),
    }


def model_from_dict(payload: dict) -> TrainedModel:
    if payload.get("format") != _MODEL_FORMAT:
        raise ValueError("not a metaprint model container")
    if payload.get("format_version") != _MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('format_version')!r}")
    model_type = _MODEL_TYPES[payload["algorithm"]]
    return model_type.from_state(
        tuple(payload["classes"]),
        combination_from_names(payload["combination"]),
        payload["state"],
    )


def save_model(model: TrainedModel, path: str | Path, params: HyperParams | None = None) -> None:
    """Write a versioned JSON container; round-trips preserve predictions bit-exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model, params), fh)
        fh.write("\n")


def load_model(path: str | Path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
