"""Wrapper feature-selection sweep and per-feature entropy analysis."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .evaluate import ExperimentConfig, bootstrap_run
from .learn import HyperParams
from .model import ALL_FEATURES, Dataset, FeatureId
from .parallel import parallel_map
from .seeding import derive_seed

# Pseudo-feature: the complete account-creation instant as one categorical value.
FULL_ACT = "act"


def enumerate_combinations(
    features: Iterable[FeatureId], level: int
) -> list[tuple[FeatureId, ...]]:
    """All unordered `level`-subsets in canonical (lexicographic) order."""
    pool = sorted(set(features), key=lambda f: f.value)
    if level < 1:
        raise ValueError("level must be >= 1")
    if level > len(pool):
        raise ValueError(f"level {level} exceeds the {len(pool)} available features")
    return list(itertools.combinations(pool, level))


@dataclass(frozen=True)
class CombinationScore:
    algorithm: str
    level: int
    combination: tuple[FeatureId, ...]
    mean_accuracy: float
    ci_half_width: float
    runs: int


def wrapper_search(
    data: Dataset,
    params: HyperParams,
    levels: Sequence[int],
    config: ExperimentConfig,
    *,
    features: Iterable[FeatureId] = ALL_FEATURES,
    workers: int = 1,
) -> list[CombinationScore]:
    """Score every combination at every level with the bootstrap harness.

    Each combination's repetition seeds derive from (master_seed,
    combination index in the full enumeration), so the ranking does not
    depend on scheduling order. Results are sorted per level by mean
    accuracy descending.
    """
    tasks: list[tuple[int, int, tuple[FeatureId, ...]]] = []
    index = 0
    for level in levels:
        for combo in enumerate_combinations(features, level):
            tasks.append((index, level, combo))
            index += 1

    base = replace(config, params=params)

    def score(task: tuple[int, int, tuple[FeatureId, ...]]) -> CombinationScore:
        combo_index, level, combo = task
        cfg = replace(
            base,
            combination=combo,
            master_seed=derive_seed(config.master_seed, "wrapper", combo_index),
        )
        report = bootstrap_run(data, cfg, workers=1)
        return CombinationScore(
            algorithm=params.algorithm,
            level=level,
            combination=combo,
            mean_accuracy=report.mean("accuracy"),
            ci_half_width=report.metrics["accuracy"].ci_half_width,
            runs=report.repetitions,
        )

    scores = parallel_map(score, tasks, workers)
    return sorted(
        scores,
        key=lambda s: (s.level, -s.mean_accuracy, tuple(f.value for f in s.combination)),
    )


def feature_entropy(data: Dataset, feature: FeatureId | str) -> float:
    """Plug-in Shannon entropy (bits) of a feature's empirical distribution.

    Pass FULL_ACT for the complete account-creation timestamp treated as
    one categorical value.
    """
    if len(data) == 0:
        raise ValueError("entropy of an empty dataset is undefined")
    if feature == FULL_ACT:
        values = np.array(
            [r.account_created_at.timestamp() for r in data.records], dtype=np.int64
        )
    else:
        values = data.feature_matrix([FeatureId(feature)])[:, 0]
    _, counts = np.unique(values, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def entropy_table(data: Dataset) -> list[tuple[str, float]]:
    """Entropy of all 14 features plus the full-ACT pseudo-feature,
    sorted descending."""
    rows = [(FULL_ACT, feature_entropy(data, FULL_ACT))]
    rows += [(f.value, feature_entropy(data, f)) for f in ALL_FEATURES]
    return sorted(rows, key=lambda r: (-r[1], r[0]))
