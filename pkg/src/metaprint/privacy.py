"""Obfuscation mechanisms and the perturbation-sweep schedule.

Two mechanisms: magnitude rounding applied to a growing fraction of
training rows (randomization), and quantile binning that replaces values
with category indices (anonymization). Perturbation always targets the
training side; the attacker's fresh observations stay clean.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ScheduleError
from .evaluate import ExperimentConfig, MetricsReport, bootstrap_run
from .learn import HyperParams
from .model import Dataset, FeatureId, SampleSet
from .seeding import derive_seed, rng

MECHANISM_ROUNDING = "rounding_randomization"
MECHANISM_BINNING = "anonymization_binning"
MECHANISMS = (MECHANISM_ROUNDING, MECHANISM_BINNING)

DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(11))


def _digit_count(value: int) -> int:
    return len(str(int(value))) if value > 0 else 1


def _granularity(digits: int) -> int:
    # keep the leading digits, dropping one place below the most
    # significant ones: 31 -> 30 (g=10), 1592 -> 1600 (g=100), 7 -> 7.
    if digits <= 1:
        return 1
    if digits == 2:
        return 10
    return 10 ** (digits - 2)


def round_magnitude(value: int) -> int:
    """Round a non-negative integer to its magnitude granularity.

    Halves round away from zero. Idempotent, and never moves a value by
    more than half its granularity.
    """
    value = int(value)
    if value < 0:
        raise ValueError("round_magnitude expects a non-negative integer")
    g = _granularity(_digit_count(value))
    q, r = divmod(value, g)
    return (q + (1 if 2 * r >= g else 0)) * g


# Powers of ten for an integer-exact digit count (no float log10 edge cases).
_POW10 = 10 ** np.arange(1, 19, dtype=np.int64)


def round_magnitude_array(values: np.ndarray) -> np.ndarray:
    """Vectorized round_magnitude over a non-negative integer array."""
    v = np.asarray(values, dtype=np.int64)
    if (v < 0).any():
        raise ValueError("round_magnitude expects non-negative integers")
    digits = np.searchsorted(_POW10, v, side="right") + 1
    g = np.where(digits <= 1, 1, np.where(digits == 2, 10, 10 ** (np.maximum(digits, 2) - 2)))
    q, r = np.divmod(v, g)
    return (q + (2 * r >= g)) * g


def _column_positions(
    samples: SampleSet, columns: Sequence[FeatureId]
) -> list[int]:
    positions = []
    for column in columns:
        if column not in samples.combination:
            raise ScheduleError(
                f"column {column.value!r} is not part of the feature combination "
                f"{[f.value for f in samples.combination]}"
            )
        positions.append(samples.combination.index(column))
    return positions


def _perturb_rows(
    samples: SampleSet,
    columns: Sequence[FeatureId],
    fraction: float,
    seed: int,
    replace_column,
) -> SampleSet:
    """Apply `replace_column` to floor(fraction*rows) rows per column.

    Rows are drawn uniformly without replacement, independently per
    column, with per-column seeds derived from (seed, column position).
    Labels, row count, and row order never change.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    positions = _column_positions(samples, columns)
    n_rows = len(samples)
    count = int(np.floor(fraction * n_rows))
    if count == 0:
        return samples
    X = samples.X.copy()
    for pos in positions:
        g = rng(seed, "column", pos)
        rows = g.choice(n_rows, size=count, replace=False)
        X[rows, pos] = replace_column(X[rows, pos], samples.X[:, pos])
    return SampleSet(samples.combination, X, samples.label_codes, samples.classes)


def randomize_dataset(
    train: SampleSet,
    columns: Sequence[FeatureId],
    fraction: float,
    seed: int,
) -> SampleSet:
    """Magnitude-round the selected columns of a training-row fraction."""

    def rounded(chosen: np.ndarray, _full_column: np.ndarray) -> np.ndarray:
        return round_magnitude_array(np.rint(chosen).astype(np.int64)).astype(np.float64)

    return _perturb_rows(train, columns, fraction, seed, rounded)


def bin_edges(train_values: np.ndarray, bins: int, equal_width: bool = False) -> np.ndarray:
    """bins-1 category edges computed from training values only."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    train_values = np.asarray(train_values, dtype=np.float64)
    if train_values.size == 0:
        raise ValueError("cannot compute bin edges from an empty column")
    quantiles = np.arange(1, bins) / bins
    if equal_width:
        lo, hi = float(train_values.min()), float(train_values.max())
        return lo + (hi - lo) * quantiles
    return np.quantile(train_values, quantiles)


def anonymize_bins(
    train_values: np.ndarray,
    test_values: np.ndarray,
    bins: int,
    *,
    equal_width: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Replace values with their category index (0..bins-1).

    Edges are equal-frequency quantiles of the training column (or
    equal-width with the flag); test values map through the same edges,
    clamping beyond-range values to the end categories. Indices are
    monotone non-decreasing in the input value.
    """
    edges = bin_edges(train_values, bins, equal_width)
    # side="left" keeps a constant column in category 0 even though all
    # its quantile edges coincide with the value
    return (
        np.searchsorted(edges, np.asarray(train_values, dtype=np.float64), side="left"),
        np.searchsorted(edges, np.asarray(test_values, dtype=np.float64), side="left"),
    )


def bin_training_rows(
    train: SampleSet,
    columns: Sequence[FeatureId],
    fraction: float,
    bins: int,
    seed: int,
) -> SampleSet:
    """Sweep variant of anonymization: the chosen training rows' values
    are replaced by their bin index (edges from the clean column)."""

    def binned(chosen: np.ndarray, full_column: np.ndarray) -> np.ndarray:
        edges = bin_edges(full_column, bins)
        return np.searchsorted(edges, chosen, side="left").astype(np.float64)

    return _perturb_rows(train, columns, fraction, seed, binned)


@dataclass(frozen=True)
class ObfuscationSchedule:
    """Which columns to perturb, how much, and with which mechanism."""

    columns: tuple[FeatureId, ...]
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    mechanism: str = MECHANISM_ROUNDING
    bins: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.columns:
            raise ScheduleError("schedule must name at least one column")
        if not self.fractions:
            raise ValueError("schedule must contain at least one fraction")
        if any(not 0.0 <= f <= 1.0 for f in self.fractions):
            raise ValueError("fractions must lie in [0, 1]")
        if list(self.fractions) != sorted(self.fractions):
            raise ValueError("fractions must be sorted ascending")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    report: MetricsReport


def obfuscation_sweep(
    data: Dataset,
    combination: Sequence[FeatureId],
    params: HyperParams,
    schedule: ObfuscationSchedule,
    config: ExperimentConfig,
    *,
    workers: int = 1,
) -> list[SweepPoint]:
    """Accuracy-vs-fraction curve: train perturbed, test clean.

    Experiment seeds are shared across fractions, so the fraction-0 point
    is bit-equal to an unobfuscated baseline run with the same config.
    """
    base = replace(config, combination=tuple(combination), params=params)
    points = []
    for f_idx, fraction in enumerate(schedule.fractions):

        def transform(train_set: SampleSet, rep: int, _fraction=fraction, _f_idx=f_idx) -> SampleSet:
            seed = derive_seed(schedule.seed, "fraction", _f_idx, "rep", rep)
            if schedule.mechanism == MECHANISM_ROUNDING:
                return randomize_dataset(train_set, schedule.columns, _fraction, seed)
            return bin_training_rows(
                train_set, schedule.columns, _fraction, schedule.bins, seed
            )

        report = bootstrap_run(data, base, train_transform=transform, workers=workers)
        points.append(SweepPoint(fraction, report))
    return points
