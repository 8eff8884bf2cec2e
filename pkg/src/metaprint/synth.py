"""Synthetic user populations with controllable inter-user separability.

Each user gets one account creation time (globally unique), a fixed pair
of boolean flags, a per-counter latent mean, and a 24-bin hour-of-day
posting preference. Counter observations are the latent mean plus clipped
Gaussian noise and a bounded random walk, so the total deviation from the
mean is structurally bounded: for large separability, assigning each
record to the nearest latent mean recovers its user exactly.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .model import UTC, COUNTER_FEATURES, Dataset, FeatureId, TweetRecord
from .seeding import rng

# Intra-user noise scale (sigma). Separability is expressed in units of it.
NOISE_SCALE = 1.0

# Gaussian noise and the cumulative walk are both clipped to +/- 3 sigma,
# so |observation - latent mean| <= 6 sigma + 0.5 (rounding).
_CLIP_SIGMAS = 3.0

_COUNTER_BASE = {
    FeatureId.FAVOURITES_COUNT: 40.0,
    FeatureId.FOLLOWER_COUNT: 60.0,
    FeatureId.FRIEND_COUNT: 50.0,
    FeatureId.LISTED_COUNT: 5.0,
    FeatureId.STATUSES_COUNT: 100.0,
}

# Mild diurnal base shape for posting hours (quiet 00:00-06:59).
_BASE_HOUR_WEIGHTS = np.array([0.4] * 7 + [1.2] * 17)
_BASE_HOUR_PROBS = _BASE_HOUR_WEIGHTS / _BASE_HOUR_WEIGHTS.sum()

_DEFAULT_EPOCH = (
    dt.datetime(2008, 1, 1, tzinfo=UTC),
    dt.datetime(2016, 1, 1, tzinfo=UTC),
)


@dataclass(frozen=True)
class PopulationSpec:
    """Knobs for one synthetic population.

    `separability` is the average spacing between adjacent users' latent
    counter means, in units of the intra-user noise scale; 0 collapses
    every user onto one shared mean.
    """

    users: int
    tweets_per_user: int
    separability: float = 4.0
    epoch_range: tuple[dt.datetime, dt.datetime] = _DEFAULT_EPOCH
    counter_walk_step: float = 0.5
    geo_prob: float = 0.45
    verified_prob: float = 0.015
    hour_concentration: float = 8.0
    posting_window_days: int = 120
    seed: int = 0

    def __post_init__(self) -> None:
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.tweets_per_user < 1:
            raise ValueError("tweets_per_user must be >= 1")
        if self.separability < 0:
            raise ValueError("separability must be >= 0")
        if self.counter_walk_step < 0:
            raise ValueError("counter_walk_step must be >= 0")
        for name in ("geo_prob", "verified_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.hour_concentration <= 0:
            raise ValueError("hour_concentration must be > 0")
        if self.posting_window_days < 1:
            raise ValueError("posting_window_days must be >= 1")
        start, end = self.epoch_range
        if start.tzinfo is None or end.tzinfo is None:
            raise ValueError("epoch_range instants must be timezone-aware")
        if start >= end:
            raise ValueError("epoch_range start must be before end")


def _id_width(users: int) -> int:
    return max(5, len(str(users - 1)))


def user_id_for(spec: PopulationSpec, index: int) -> str:
    return f"user{index:0{_id_width(spec.users)}d}"


def latent_counter_means(spec: PopulationSpec) -> dict[FeatureId, np.ndarray]:
    """Per-counter latent means, one value per user.

    For each counter independently, users are assigned random distinct
    rank positions on a grid spaced `separability * NOISE_SCALE` apart,
    so adjacent (sorted) user means are that far apart by construction.
    """
    generator = rng(spec.seed, "means")
    spacing = spec.separability * NOISE_SCALE
    means: dict[FeatureId, np.ndarray] = {}
    for counter in COUNTER_FEATURES:
        ranks = generator.permutation(spec.users)
        means[counter] = _COUNTER_BASE[counter] + spacing * ranks
    return means


def _unique_ints(generator: np.random.Generator, low: int, high: int, n: int) -> np.ndarray:
    """n distinct integers in [low, high); colliding draws are redrawn."""
    if high - low < n:
        raise ValueError("range too small for the requested number of distinct values")
    values = generator.integers(low, high, size=n)
    while True:
        uniq, first = np.unique(values, return_index=True)
        if len(uniq) == n:
            return values
        dup_mask = np.ones(n, dtype=bool)
        dup_mask[first] = False
        values[dup_mask] = generator.integers(low, high, size=int(dup_mask.sum()))


def _epoch_seconds(instant: dt.datetime) -> int:
    return int(instant.timestamp())


def _bounded_walk(generator: np.random.Generator, step: float, n: int) -> np.ndarray:
    if step == 0.0:
        return np.zeros(n)
    walk = np.cumsum(generator.uniform(-step, step, size=n))
    return np.clip(walk, -_CLIP_SIGMAS * NOISE_SCALE, _CLIP_SIGMAS * NOISE_SCALE)


def generate_population(spec: PopulationSpec) -> Dataset:
    """Generate a validated dataset; byte-identical under a fixed spec."""
    acts = _unique_ints(
        rng(spec.seed, "act"),
        _epoch_seconds(spec.epoch_range[0]),
        _epoch_seconds(spec.epoch_range[1]),
        spec.users,
    )
    means = latent_counter_means(spec)
    T = spec.tweets_per_user
    post_window_start = _epoch_seconds(spec.epoch_range[1])
    window_seconds = spec.posting_window_days * 86400
    max_extra = max(0, int(round(2 * spec.counter_walk_step)))

    records: list[TweetRecord] = []
    for k in range(spec.users):
        user = user_id_for(spec, k)
        g = rng(spec.seed, "user", k)
        act = dt.datetime.fromtimestamp(int(acts[k]), tz=UTC)

        geo = bool(g.random() < spec.geo_prob)
        verified = bool(g.random() < spec.verified_prob)
        hour_probs = g.dirichlet(spec.hour_concentration * 24.0 * _BASE_HOUR_PROBS)

        days = g.integers(0, spec.posting_window_days, size=T)
        hours = g.choice(24, size=T, p=hour_probs)
        minutes = g.integers(0, 60, size=T)
        seconds = g.integers(0, 60, size=T)
        instants = post_window_start + days * 86400 + hours * 3600 + minutes * 60 + seconds
        while len(np.unique(instants)) != T:
            uniq, first = np.unique(instants, return_index=True)
            dup = np.ones(T, dtype=bool)
            dup[first] = False
            n_dup = int(dup.sum())
            instants[dup] = (
                post_window_start
                + g.integers(0, spec.posting_window_days, size=n_dup) * 86400
                + g.choice(24, size=n_dup, p=hour_probs) * 3600
                + g.integers(0, 60, size=n_dup) * 60
                + g.integers(0, 60, size=n_dup)
            )
        instants.sort()

        counters: dict[FeatureId, np.ndarray] = {}
        for counter in COUNTER_FEATURES:
            mean = means[counter][k]
            if counter is FeatureId.STATUSES_COUNT:
                base = max(0, int(round(mean)))
                increments = 1 + (
                    g.integers(0, max_extra + 1, size=T) if max_extra else np.zeros(T, dtype=np.int64)
                )
                counters[counter] = base + np.cumsum(increments)
            else:
                noise = np.clip(
                    g.normal(0.0, NOISE_SCALE, size=T),
                    -_CLIP_SIGMAS * NOISE_SCALE,
                    _CLIP_SIGMAS * NOISE_SCALE,
                )
                drift = _bounded_walk(g, spec.counter_walk_step, T)
                values = np.rint(mean + noise + drift).astype(np.int64)
                counters[counter] = np.maximum(values, 0)

        for t in range(T):
            records.append(
                TweetRecord(
                    user_id=user,
                    tweet_id=f"t{k:06d}-{t:05d}",
                    posted_at=dt.datetime.fromtimestamp(int(instants[t]), tz=UTC),
                    account_created_at=act,
                    favourites_count=int(counters[FeatureId.FAVOURITES_COUNT][t]),
                    follower_count=int(counters[FeatureId.FOLLOWER_COUNT][t]),
                    friend_count=int(counters[FeatureId.FRIEND_COUNT][t]),
                    listed_count=int(counters[FeatureId.LISTED_COUNT][t]),
                    statuses_count=int(counters[FeatureId.STATUSES_COUNT][t]),
                    geo_enabled=geo,
                    verified=verified,
                )
            )
    return Dataset(records)
