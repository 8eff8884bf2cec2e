"""Domain types for metadata-based account identification.

An observation is one tweet-style metadata record: who posted it, when,
when the account was registered, five activity counters, and two boolean
account flags. Fourteen derived features (the six calendar fields of the
account creation time, the hour of day of the post, the five counters,
and the two booleans) form the basis every classifier works on.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidCombinationError, RecordValidationError, ShapeError

UTC = dt.timezone.utc

# An account identifier; non-empty, compared by exact string equality.
UserId = str


class FeatureId(str, Enum):
    """The fourteen features extractable from one metadata record."""

    ACT_YEAR = "act_year"
    ACT_MONTH = "act_month"
    ACT_DAY = "act_day"
    ACT_HOUR = "act_hour"
    ACT_MINUTE = "act_minute"
    ACT_SECOND = "act_second"
    FAVOURITES_COUNT = "favourites_count"
    FOLLOWER_COUNT = "follower_count"
    FRIEND_COUNT = "friend_count"
    LISTED_COUNT = "listed_count"
    STATUSES_COUNT = "statuses_count"
    GEO_ENABLED = "geo_enabled"
    VERIFIED = "verified"
    POST_HOUR = "post_hour"

    def __str__(self) -> str:  # CSV/CLI rendering
        return self.value


ACT_FEATURES: tuple[FeatureId, ...] = (
    FeatureId.ACT_YEAR,
    FeatureId.ACT_MONTH,
    FeatureId.ACT_DAY,
    FeatureId.ACT_HOUR,
    FeatureId.ACT_MINUTE,
    FeatureId.ACT_SECOND,
)

COUNTER_FEATURES: tuple[FeatureId, ...] = (
    FeatureId.FAVOURITES_COUNT,
    FeatureId.FOLLOWER_COUNT,
    FeatureId.FRIEND_COUNT,
    FeatureId.LISTED_COUNT,
    FeatureId.STATUSES_COUNT,
)

BOOLEAN_FEATURES: tuple[FeatureId, ...] = (FeatureId.GEO_ENABLED, FeatureId.VERIFIED)

ALL_FEATURES: tuple[FeatureId, ...] = (
    ACT_FEATURES + COUNTER_FEATURES + BOOLEAN_FEATURES + (FeatureId.POST_HOUR,)
)

assert len(ALL_FEATURES) == 14

# Column position of each feature in the cached full feature matrix.
_FEATURE_COLUMN: dict[FeatureId, int] = {f: i for i, f in enumerate(ALL_FEATURES)}


def combination_from_names(names: Iterable[str]) -> tuple[FeatureId, ...]:
    """Resolve feature names (e.g. from a CLI flag) into a combination."""
    out = []
    for name in names:
        name = name.strip()
        try:
            out.append(FeatureId(name))
        except ValueError:
            known = ", ".join(f.value for f in ALL_FEATURES)
            raise InvalidCombinationError(f"unknown feature {name!r}; known features: {known}")
    return check_combination(out)


def check_combination(combination: Sequence[FeatureId]) -> tuple[FeatureId, ...]:
    """Validate a combination: non-empty, duplicate-free."""
    combo = tuple(combination)
    if not combo:
        raise InvalidCombinationError("combination must contain at least one feature")
    if len(set(combo)) != len(combo):
        seen, dups = set(), []
        for f in combo:
            if f in seen:
                dups.append(f.value)
            seen.add(f)
        raise InvalidCombinationError(f"duplicate features in combination: {dups}")
    return combo


@dataclass(frozen=True)
class TweetRecord:
    """One metadata observation.

    Timestamps are timezone-aware UTC instants with seconds precision.
    The account creation time is constant across all records of a user.
    """

    user_id: UserId
    tweet_id: str
    posted_at: dt.datetime
    account_created_at: dt.datetime
    favourites_count: int
    follower_count: int
    friend_count: int
    listed_count: int
    statuses_count: int
    geo_enabled: bool
    verified: bool


_COUNTER_FIELDS = (
    "favourites_count",
    "follower_count",
    "friend_count",
    "listed_count",
    "statuses_count",
)


def _check_utc(value: dt.datetime, field: str) -> None:
    if not isinstance(value, dt.datetime):
        raise RecordValidationError(field, f"expected a datetime, got {type(value).__name__}")
    if value.tzinfo is None or value.utcoffset() != dt.timedelta(0):
        raise RecordValidationError(field, "timestamp must be timezone-aware UTC")


def validate_record(record: TweetRecord) -> TweetRecord:
    """Return `record` unchanged if every per-record invariant holds.

    Raises RecordValidationError naming the offending field otherwise.
    """
    if not record.user_id:
        raise RecordValidationError("user_id", "must be a non-empty string")
    _check_utc(record.posted_at, "posted_at")
    _check_utc(record.account_created_at, "account_created_at")
    if record.account_created_at > record.posted_at:
        raise RecordValidationError(
            "account_created_at", "account creation must not be after the post time"
        )
    for field in _COUNTER_FIELDS:
        value = getattr(record, field)
        if isinstance(value, bool) or not isinstance(value, int):
            raise RecordValidationError(field, "must be an integer")
        if value < 0:
            raise RecordValidationError(field, f"must be non-negative, got {value}")
    for field in ("geo_enabled", "verified"):
        if not isinstance(getattr(record, field), bool):
            raise RecordValidationError(field, "must be a boolean")
    return record


def _raw_feature_value(record: TweetRecord, feature: FeatureId) -> float:
    act = record.account_created_at
    if feature is FeatureId.ACT_YEAR:
        return float(act.year)
    if feature is FeatureId.ACT_MONTH:
        return float(act.month)
    if feature is FeatureId.ACT_DAY:
        return float(act.day)
    if feature is FeatureId.ACT_HOUR:
        return float(act.hour)
    if feature is FeatureId.ACT_MINUTE:
        return float(act.minute)
    if feature is FeatureId.ACT_SECOND:
        return float(act.second)
    if feature is FeatureId.POST_HOUR:
        return float(record.posted_at.hour)
    if feature is FeatureId.GEO_ENABLED:
        return float(record.geo_enabled)
    if feature is FeatureId.VERIFIED:
        return float(record.verified)
    return float(getattr(record, feature.value))


@dataclass(frozen=True)
class FeatureVector:
    """Numeric encoding of one record under a feature combination."""

    combination: tuple[FeatureId, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.combination) != len(self.values):
            raise ShapeError(
                f"combination has {len(self.combination)} features "
                f"but {len(self.values)} values were given"
            )


def extract_features(
    record: TweetRecord, combination: Sequence[FeatureId]
) -> FeatureVector:
    """Encode `record` under `combination`.

    Calendar fields come from the UTC decomposition of the account
    creation time, post_hour is the 0..23 hour of day of the post,
    counters are copied verbatim, and booleans map to 0/1. The encoding
    is a pure function of (record, combination).
    """
    combo = check_combination(combination)
    return FeatureVector(combo, tuple(_raw_feature_value(record, f) for f in combo))


def act_from_calendar_fields(
    year: int, month: int, day: int, hour: int, minute: int, second: int
) -> dt.datetime:
    """Recompose a UTC instant from the six calendar fields."""
    return dt.datetime(year, month, day, hour, minute, second, tzinfo=UTC)


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector together with its ground-truth account."""

    features: FeatureVector
    label: UserId


class Dataset:
    """An immutable, validated collection of records indexed by account.

    Construction validates every record and the cross-record invariant
    that all records of a user share one account creation time. The full
    14-column feature matrix is computed lazily and cached, so repeated
    extraction under different combinations is a column slice.
    """

    __slots__ = ("records", "index", "_matrix", "_label_codes", "_users")

    def __init__(self, records: Iterable[TweetRecord]):
        recs = tuple(records)
        index: dict[UserId, list[int]] = {}
        act_by_user: dict[UserId, dt.datetime] = {}
        for pos, record in enumerate(recs):
            validate_record(record)
            known = act_by_user.get(record.user_id)
            if known is None:
                act_by_user[record.user_id] = record.account_created_at
            elif known != record.account_created_at:
                raise RecordValidationError(
                    "account_created_at",
                    f"user {record.user_id!r} has conflicting account creation times",
                )
            index.setdefault(record.user_id, []).append(pos)
        self.records = recs
        self.index: dict[UserId, tuple[int, ...]] = {
            user: tuple(positions) for user, positions in index.items()
        }
        self._matrix: np.ndarray | None = None
        self._label_codes: np.ndarray | None = None
        self._users: tuple[UserId, ...] = tuple(sorted(self.index))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TweetRecord]:
        return iter(self.records)

    @property
    def users(self) -> tuple[UserId, ...]:
        """Distinct accounts, lexicographically sorted."""
        return self._users

    @property
    def n_users(self) -> int:
        return len(self._users)

    def records_for(self, user: UserId) -> tuple[TweetRecord, ...]:
        return tuple(self.records[i] for i in self.index[user])

    def full_matrix(self) -> np.ndarray:
        """The cached records x 14 feature matrix (read-only float64)."""
        if self._matrix is None:
            m = np.empty((len(self.records), len(ALL_FEATURES)), dtype=np.float64)
            for i, r in enumerate(self.records):
                act = r.account_created_at
                m[i, 0] = act.year
                m[i, 1] = act.month
                m[i, 2] = act.day
                m[i, 3] = act.hour
                m[i, 4] = act.minute
                m[i, 5] = act.second
                m[i, 6] = r.favourites_count
                m[i, 7] = r.follower_count
                m[i, 8] = r.friend_count
                m[i, 9] = r.listed_count
                m[i, 10] = r.statuses_count
                m[i, 11] = r.geo_enabled
                m[i, 12] = r.verified
                m[i, 13] = r.posted_at.hour
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def feature_matrix(self, combination: Sequence[FeatureId]) -> np.ndarray:
        """Feature values for every record under `combination`."""
        combo = check_combination(combination)
        cols = [_FEATURE_COLUMN[f] for f in combo]
        return self.full_matrix()[:, cols]

    def label_codes(self) -> np.ndarray:
        """Per-record index of the owning user into `self.users`."""
        if self._label_codes is None:
            code_of = {user: i for i, user in enumerate(self._users)}
            codes = np.fromiter(
                (code_of[r.user_id] for r in self.records),
                dtype=np.intp,
                count=len(self.records),
            )
            codes.setflags(write=False)
            self._label_codes = codes
        return self._label_codes


class SampleSet(Sequence):
    """Array-backed sequence of labeled samples sharing one combination.

    `classes` is the lexicographically sorted identity set; `label_codes`
    indexes into it. Arrays are read-only so sample sets can be shared
    across workers.
    """

    __slots__ = ("combination", "X", "label_codes", "classes")

    def __init__(
        self,
        combination: Sequence[FeatureId],
        X: np.ndarray,
        label_codes: np.ndarray,
        classes: Sequence[UserId],
    ):
        combo = check_combination(combination)
        X = np.ascontiguousarray(X, dtype=np.float64)
        label_codes = np.asarray(label_codes, dtype=np.intp)
        if X.ndim != 2 or X.shape[1] != len(combo):
            raise ShapeError(
                f"feature matrix with {X.shape} does not match "
                f"a {len(combo)}-feature combination"
            )
        if label_codes.shape != (X.shape[0],):
            raise ShapeError("label_codes length does not match the sample count")
        classes = tuple(classes)
        if len(label_codes) and (label_codes.min() < 0 or label_codes.max() >= len(classes)):
            raise ShapeError("label code out of range for the class list")
        X.setflags(write=False)
        label_codes.setflags(write=False)
        self.combination = combo
        self.X = X
        self.label_codes = label_codes
        self.classes = classes

    @classmethod
    def from_samples(cls, samples: Iterable[LabeledSample]) -> "SampleSet":
        samples = list(samples)
        if not samples:
            raise ShapeError("cannot build a sample set from zero samples")
        combo = samples[0].features.combination
        for s in samples:
            if s.features.combination != combo:
                raise ShapeError("all samples must share one feature combination")
        classes = tuple(sorted({s.label for s in samples}))
        code_of = {u: i for i, u in enumerate(classes)}
        X = np.array([s.features.values for s in samples], dtype=np.float64)
        codes = np.array([code_of[s.label] for s in samples], dtype=np.intp)
        return cls(combo, X, codes, classes)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> LabeledSample:
        row = self.X[i]
        return LabeledSample(
            FeatureVector(self.combination, tuple(float(v) for v in row)),
            self.classes[self.label_codes[i]],
        )

    def labels(self) -> tuple[UserId, ...]:
        return tuple(self.classes[c] for c in self.label_codes)

    def restrict_to(self, classes: Sequence[UserId]) -> "SampleSet":
        """Samples whose label is in `classes` (re-coded to that subset)."""
        subset = tuple(sorted(classes))
        code_of = {u: i for i, u in enumerate(subset)}
        keep_codes = {
            i for i, u in enumerate(self.classes) if u in code_of
        }
        mask = np.isin(self.label_codes, np.array(sorted(keep_codes), dtype=np.intp))
        labels = [self.classes[c] for c in self.label_codes[mask]]
        new_codes = np.array([code_of[u] for u in labels], dtype=np.intp)
        return SampleSet(self.combination, self.X[mask], new_codes, subset)
