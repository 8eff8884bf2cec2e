"""Bootstrap experiment harness: metrics, confidence intervals, timings.

Each repetition draws a fresh user subset, standardizes the per-user
record count, splits per user into train/test, trains, and scores the
test side. Repetition seeds derive from (master_seed, repetition index),
so results are identical for any worker count.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError
from .ingest import train_size_for
from .learn import HyperParams, PredictionVector, rank_of_truth, train
from .model import Dataset, FeatureId, SampleSet, UserId, check_combination
from .parallel import parallel_map
from .seeding import derive_seed, rng

TrainTransform = Callable[[SampleSet, int], SampleSet]


@dataclass(frozen=True)
class ExperimentConfig:
    """One identification experiment: who, how much data, which model."""

    u: int
    combination: tuple[FeatureId, ...]
    per_user: int = 200
    repetitions: int = 200
    split_ratio: float = 0.7
    params: HyperParams = HyperParams()
    top_k: tuple[int, ...] = (1, 5, 10)
    master_seed: int = 0

    def __post_init__(self) -> None:
        check_combination(self.combination)
        if self.u < 1:
            raise ValueError("u must be >= 1")
        if self.per_user < 2:
            raise ValueError("per_user must be >= 2 so both split sides are non-empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must be in (0, 1)")
        if any(k < 1 for k in self.top_k):
            raise ValueError("top_k entries must be >= 1")

    @property
    def n(self) -> int:
        return len(self.combination)


@dataclass(frozen=True)
class MetricStat:
    mean: float
    ci_half_width: float


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated metrics with 95% normal-approximation half-widths."""

    metrics: dict[str, MetricStat]
    repetitions: int
    train_time_mean_s: float
    predict_time_mean_s: float

    def metric_items(self) -> list[tuple[str, MetricStat]]:
        return list(self.metrics.items())

    def mean(self, name: str) -> float:
        return self.metrics[name].mean

    def deterministic_dict(self) -> dict:
        """Everything except wall-clock fields, for byte-identity checks."""
        return {
            name: (stat.mean, stat.ci_half_width) for name, stat in self.metrics.items()
        } | {"repetitions": self.repetitions}


def _ci_half_width(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return 1.96 * statistics.stdev(values) / len(values) ** 0.5


def _aggregate(per_rep: list[dict[str, float]], train_t: list[float], predict_t: list[float]) -> MetricsReport:
    names = list(per_rep[0])
    metrics = {}
    for name in names:
        values = [rep[name] for rep in per_rep]
        metrics[name] = MetricStat(float(np.mean(values)), float(_ci_half_width(values)))
    return MetricsReport(
        metrics=metrics,
        repetitions=len(per_rep),
        train_time_mean_s=float(np.mean(train_t)),
        predict_time_mean_s=float(np.mean(predict_t)),
    )


def metrics_from_probabilities(
    P: np.ndarray,
    truth_codes: np.ndarray,
    n_classes: int,
    top_k: Sequence[int],
) -> dict[str, float]:
    """One repetition's metric bundle from a probability matrix.

    Accuracy is the top-1 hit fraction under the (probability descending,
    class ascending) ranking; macro precision/recall/F average over the
    classes present in the truth labels, with 0 for a class that is never
    predicted. top-k values for k beyond the identity set are clamped.
    """
    ranks = rank_of_truth(P, truth_codes)
    pred = np.argmax(P, axis=1)
    bundle: dict[str, float] = {"accuracy": float(np.mean(ranks < 1))}
    for k in top_k:
        bundle[f"top_{k}"] = float(np.mean(ranks < min(k, n_classes)))
    actual = np.bincount(truth_codes, minlength=n_classes)
    predicted = np.bincount(pred, minlength=n_classes)
    correct = np.bincount(truth_codes[pred == truth_codes], minlength=n_classes)
    present = np.flatnonzero(actual)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted[present] > 0, correct[present] / predicted[present], 0.0)
        recall = correct[present] / actual[present]
        denom = precision + recall
        f_score = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    bundle["macro_precision"] = float(np.mean(precision))
    bundle["macro_recall"] = float(np.mean(recall))
    bundle["macro_f_score"] = float(np.mean(f_score))
    return bundle


def accuracy_metrics(
    predictions: Sequence[tuple[PredictionVector, UserId]],
    top_k: Sequence[int] = (1, 5, 10),
) -> dict[str, float]:
    """Metric bundle for explicit (prediction, truth) pairs."""
    if not predictions:
        raise ValueError("predictions must be non-empty")
    classes = predictions[0][0].classes
    P = np.vstack([p.probabilities for p, _ in predictions])
    code_of = {user: i for i, user in enumerate(classes)}
    truth = np.array([code_of[t] for _, t in predictions], dtype=np.intp)
    return metrics_from_probabilities(P, truth, len(classes), top_k)


def _eligible_users(data: Dataset, config: ExperimentConfig) -> list[UserId]:
    eligible = [u for u in data.users if len(data.index[u]) >= config.per_user]
    if len(eligible) < config.u:
        raise CapacityError(
            f"need {config.u} users with >= {config.per_user} records, "
            f"dataset supports {len(eligible)}"
        )
    return eligible


def sample_and_split(
    data: Dataset,
    eligible: Sequence[UserId],
    config: ExperimentConfig,
    seed_keys: tuple,
) -> tuple[SampleSet, SampleSet]:
    """One seeded draw: pick u users, keep per_user records each, split."""
    g = rng(*seed_keys)
    matrix = data.feature_matrix(config.combination)
    picked = np.sort(g.choice(len(eligible), size=config.u, replace=False))
    chosen = tuple(eligible[i] for i in picked)
    n_train = train_size_for(config.per_user, config.split_ratio)
    train_rows, test_rows = [], []
    train_codes, test_codes = [], []
    for code, user in enumerate(chosen):
        positions = np.asarray(data.index[user], dtype=np.intp)
        perm = g.permutation(len(positions))[: config.per_user]
        kept = positions[perm]
        train_rows.append(kept[:n_train])
        test_rows.append(kept[n_train:])
        train_codes.append(np.full(n_train, code, dtype=np.intp))
        test_codes.append(np.full(config.per_user - n_train, code, dtype=np.intp))
    train_idx = np.concatenate(train_rows)
    test_idx = np.concatenate(test_rows)
    return (
        SampleSet(config.combination, matrix[train_idx], np.concatenate(train_codes), chosen),
        SampleSet(config.combination, matrix[test_idx], np.concatenate(test_codes), chosen),
    )


def bootstrap_run(
    data: Dataset,
    config: ExperimentConfig,
    *,
    train_transform: TrainTransform | None = None,
    workers: int = 1,
) -> MetricsReport:
    """Run the full bootstrap experiment and aggregate all metrics."""
    eligible = _eligible_users(data, config)
    data.feature_matrix(config.combination)  # build the cache before forking work

    def run_rep(rep: int) -> tuple[dict[str, float], float, float]:
        train_set, test_set = sample_and_split(
            data, eligible, config, (config.master_seed, "rep", rep)
        )
        if train_transform is not None:
            train_set = train_transform(train_set, rep)
        params = replace(
            config.params,
            seed=derive_seed(config.master_seed, config.params.seed, "model", rep),
        )
        t0 = time.perf_counter()
        model = train(train_set, params)
        t1 = time.perf_counter()
        P = model.predict_proba_matrix(test_set.X)
        t2 = time.perf_counter()
        bundle = metrics_from_probabilities(
            P, test_set.label_codes, len(test_set.classes), config.top_k
        )
        return bundle, t1 - t0, t2 - t1

    results = parallel_map(run_rep, range(config.repetitions), workers)
    return _aggregate(
        [r[0] for r in results], [r[1] for r in results], [r[2] for r in results]
    )


def scaling_sweep(
    data: Dataset,
    config: ExperimentConfig,
    u_values: Sequence[int],
    *,
    workers: int = 1,
) -> list[tuple[int, MetricsReport]]:
    """One bootstrap experiment per user-pool size, fixed everything else."""
    out = []
    for i, u in enumerate(u_values):
        cfg = replace(
            config, u=u, master_seed=derive_seed(config.master_seed, "sweep_u", i)
        )
        out.append((u, bootstrap_run(data, cfg, workers=workers)))
    return out


@dataclass(frozen=True)
class TimingRow:
    algorithm: str
    u: int
    n: int
    combination: tuple[FeatureId, ...]
    per_user: int
    runs: int
    train_time_s: float
    predict_time_s: float
    stable: bool


# A cell is flagged unstable when its run-to-run spread exceeds 20% of the
# median total time; sub-5ms spread is attributed to scheduler noise.
_STABLE_REL_SPREAD = 0.2
_STABLE_ABS_FLOOR_S = 0.005


def timing_benchmark(
    data: Dataset,
    cells: Sequence[ExperimentConfig],
    *,
    runs: int = 3,
    predict_batch: int | None = 1000,
) -> list[TimingRow]:
    """Median wall-clock train/predict time per configuration cell.

    The prediction phase times a fixed-size query batch (`predict_batch`
    rows of the test side, or all of it when None), so predict timings
    answer "how does classifying a fixed workload scale with the number
    of output classes" rather than folding in the growing test set.
    """
    if not cells:
        raise ValueError("timing grid must be non-empty")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    rows = []
    for idx, config in enumerate(cells):
        eligible = _eligible_users(data, config)
        data.feature_matrix(config.combination)
        train_times, predict_times = [], []
        for r in range(runs):
            train_set, test_set = sample_and_split(
                data, eligible, config, (config.master_seed, "timing", idx, r)
            )
            queries = test_set.X if predict_batch is None else test_set.X[:predict_batch]
            params = replace(
                config.params,
                seed=derive_seed(config.master_seed, config.params.seed, "timing", idx, r),
            )
            t0 = time.perf_counter()
            model = train(train_set, params)
            t1 = time.perf_counter()
            model.predict_proba_matrix(queries)
            t2 = time.perf_counter()
            train_times.append(t1 - t0)
            predict_times.append(t2 - t1)
        totals = np.asarray(train_times) + np.asarray(predict_times)
        spread = float(totals.max() - totals.min())
        stable = spread <= max(_STABLE_REL_SPREAD * float(np.median(totals)), _STABLE_ABS_FLOOR_S)
        rows.append(
            TimingRow(
                algorithm=config.params.algorithm,
                u=config.u,
                n=config.n,
                combination=config.combination,
                per_user=config.per_user,
                runs=runs,
                train_time_s=float(np.median(train_times)),
                predict_time_s=float(np.median(predict_times)),
                stable=stable,
            )
        )
    return rows
