"""Divide-and-conquer partitioned multi-class classification.

The identity set is split into balanced random subsets; one stage-1 model
per subset nominates its top candidate for each query, and a stage-2
model trained only on the candidate classes makes the final call. A plan
with one subset short-circuits to the monolithic model. Stage-2 models
are memoized per distinct candidate set with seeds derived from the set's
content, so evaluation order and cache reuse cannot change predictions.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import PlanError
from .evaluate import ExperimentConfig, metrics_from_probabilities, sample_and_split, _eligible_users
from .learn import HyperParams, PredictionVector, TrainedModel, train
from .model import Dataset, FeatureId, FeatureVector, SampleSet, UserId
from .seeding import rng


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint identity subsets covering the full identity set."""

    subsets: tuple[tuple[UserId, ...], ...]
    subset_size: int
    seed: int

    def __post_init__(self) -> None:
        seen: set[UserId] = set()
        for subset in self.subsets:
            if not subset:
                raise PlanError("plan contains an empty subset")
            overlap = seen.intersection(subset)
            if overlap:
                raise PlanError(f"identities assigned to multiple subsets: {sorted(overlap)[:5]}")
            seen.update(subset)

    @property
    def identities(self) -> frozenset[UserId]:
        return frozenset(u for subset in self.subsets for u in subset)


def partition_classes(
    identities: Sequence[UserId], subset_size: int, seed: int
) -> PartitionPlan:
    """Random balanced partition into ceil(|I|/subset_size) subsets."""
    if subset_size < 1:
        raise ValueError("subset_size must be >= 1")
    ordered = sorted(set(identities))
    if not ordered:
        raise ValueError("identities must be non-empty")
    g = rng(seed, "partition")
    shuffled = [ordered[i] for i in g.permutation(len(ordered))]
    subsets = tuple(
        tuple(sorted(shuffled[i : i + subset_size]))
        for i in range(0, len(shuffled), subset_size)
    )
    return PartitionPlan(subsets=subsets, subset_size=subset_size, seed=seed)


def _candidate_seed(base_seed: int, candidates: tuple[UserId, ...]) -> int:
    digest = hashlib.sha256("\x1f".join(candidates).encode("utf-8")).digest()
    return (base_seed & ((1 << 32) - 1)) ^ int.from_bytes(digest[:8], "big")


class PartitionedModel:
    """Stage-1 subset models plus a memoized stage-2 tournament."""

    def __init__(
        self,
        plan: PartitionPlan,
        params: HyperParams,
        subset_models: Sequence[TrainedModel],
        classes: tuple[UserId, ...],
        combination: tuple[FeatureId, ...],
    ):
        self.plan = plan
        self.params = params
        self.subset_models = tuple(subset_models)
        self.classes = classes
        self.combination = combination
        self._memo: dict[tuple[UserId, ...], TrainedModel] = {}
        self._memo_samples_key: int | None = None
        self._lock = threading.Lock()

    @property
    def is_monolithic(self) -> bool:
        return len(self.subset_models) == 1

    def stage1_candidates(self, X: np.ndarray) -> list[tuple[UserId, ...]]:
        """Per-query sorted candidate tuple (one nominee per subset model)."""
        per_model = []
        for model in self.subset_models:
            codes = model.classify_batch(X)
            per_model.append([model.classes[c] for c in codes])
        return [tuple(sorted(q)) for q in zip(*per_model)]

    def _stage2_model(self, candidates: tuple[UserId, ...], samples: SampleSet) -> TrainedModel:
        key = id(samples)
        with self._lock:
            if self._memo_samples_key != key:
                self._memo.clear()
                self._memo_samples_key = key
            model = self._memo.get(candidates)
            if model is None:
                params = replace(
                    self.params, seed=_candidate_seed(self.params.seed, candidates)
                )
                model = train(samples.restrict_to(candidates), params)
                self._memo[candidates] = model
        return model

    def predict_proba_matrix(self, X: np.ndarray, samples: SampleSet) -> np.ndarray:
        """Stage-2 probabilities embedded in the full identity set
        (zero outside the candidate classes)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if self.is_monolithic:
            return self.subset_models[0].predict_proba_matrix(X)
        candidate_sets = self.stage1_candidates(X)
        out = np.zeros((X.shape[0], len(self.classes)))
        code_of = {user: i for i, user in enumerate(self.classes)}
        groups: dict[tuple[UserId, ...], list[int]] = {}
        for i, candidates in enumerate(candidate_sets):
            groups.setdefault(candidates, []).append(i)
        for candidates, row_list in groups.items():
            stage2 = self._stage2_model(candidates, samples)
            rows = np.asarray(row_list, dtype=np.intp)
            P = stage2.predict_proba_matrix(X[rows])
            cols = np.asarray([code_of[u] for u in stage2.classes], dtype=np.intp)
            out[np.ix_(rows, cols)] = P
        return out


def train_partitioned(
    samples: SampleSet, params: HyperParams, plan: PartitionPlan
) -> PartitionedModel:
    """One stage-1 model per subset, each trained on its subset's samples.

    A single-subset plan keeps the caller's seed, making the one stage-1
    model bit-identical to the monolithic model.
    """
    present = set(samples.classes)
    missing = plan.identities - present
    if missing:
        raise PlanError(f"plan identities without training samples: {sorted(missing)[:5]}")
    models = []
    for idx, subset in enumerate(plan.subsets):
        subset_samples = samples.restrict_to(subset)
        if len(subset_samples) == 0:
            raise PlanError(f"subset {idx} has no training samples")
        if len(plan.subsets) == 1:
            subset_params = params
        else:
            subset_params = replace(
                params, seed=_candidate_seed(params.seed, ("stage1", str(idx)))
            )
        models.append(train(subset_samples, subset_params))
    return PartitionedModel(plan, params, models, samples.classes, samples.combination)


def predict_partitioned(
    model: PartitionedModel, features: FeatureVector, samples: SampleSet
) -> PredictionVector:
    """Single-observation partitioned prediction over the full identity set."""
    X = np.asarray(features.values, dtype=np.float64)[None, :]
    P = model.predict_proba_matrix(X, samples)
    return PredictionVector(model.classes, P[0])


@dataclass(frozen=True)
class PartitionBenchRow:
    u: int
    n: int
    algorithm: str
    subset_size: int
    wall_time_train_s: float
    wall_time_predict_s: float
    accuracy: float
    precision: float
    recall: float
    f_score: float
    stage1_recall: float


def partition_benchmark(
    data: Dataset,
    config: ExperimentConfig,
    subset_sizes: Sequence[int],
) -> list[PartitionBenchRow]:
    """Partitioned-vs-monolithic comparison on one shared train/test split.

    `subset_size == u` yields the single-partition (monolithic) row.
    Stage-1 candidate recall is reported separately because a stage-1
    miss can never be recovered at stage 2.
    """
    eligible = _eligible_users(data, config)
    train_set, test_set = sample_and_split(
        data, eligible, config, (config.master_seed, "partition-bench")
    )
    rows = []
    for subset_size in subset_sizes:
        plan = partition_classes(train_set.classes, subset_size, config.master_seed)
        t0 = time.perf_counter()
        model = train_partitioned(train_set, config.params, plan)
        t1 = time.perf_counter()
        P = model.predict_proba_matrix(test_set.X, train_set)
        t2 = time.perf_counter()
        bundle = metrics_from_probabilities(
            P, test_set.label_codes, len(test_set.classes), (1,)
        )
        if model.is_monolithic:
            s1_recall = 1.0
        else:
            candidates = model.stage1_candidates(test_set.X)
            truths = [test_set.classes[c] for c in test_set.label_codes]
            s1_recall = float(
                np.mean([t in cands for t, cands in zip(truths, candidates)])
            )
        rows.append(
            PartitionBenchRow(
                u=config.u,
                n=config.n,
                algorithm=config.params.algorithm,
                subset_size=subset_size,
                wall_time_train_s=t1 - t0,
                wall_time_predict_s=t2 - t1,
                accuracy=bundle["accuracy"],
                precision=bundle["macro_precision"],
                recall=bundle["macro_recall"],
                f_score=bundle["macro_f_score"],
                stage1_recall=s1_recall,
            )
        )
    return rows
