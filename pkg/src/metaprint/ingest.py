"""Load, filter, standardize, and split metadata datasets.

The canonical on-disk format is JSON lines, one record per line:

    {"user_id": str, "tweet_id": str, "posted_at": "YYYY-MM-DDThh:mm:ssZ",
     "account_created_at": "YYYY-MM-DDThh:mm:ssZ", "favourites_count": int,
     "follower_count": int, "friend_count": int, "listed_count": int,
     "statuses_count": int, "geo_enabled": bool, "verified": bool}
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientRecordsError,
    MalformedInputError,
    RecordValidationError,
    StratificationError,
)
from .model import (
    UTC,
    Dataset,
    FeatureId,
    SampleSet,
    TweetRecord,
    UserId,
    check_combination,
    validate_record,
)
from .seeding import rng

# Strict "more than 200 tweets" filter threshold.
DEFAULT_MIN_TWEETS = 201

_TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

_INT_FIELDS = (
    "favourites_count",
    "follower_count",
    "friend_count",
    "listed_count",
    "statuses_count",
)
_BOOL_FIELDS = ("geo_enabled", "verified")
_STR_FIELDS = ("user_id", "tweet_id")


def parse_timestamp(text: str) -> dt.datetime:
    return dt.datetime.strptime(text, _TIMESTAMP_FORMAT).replace(tzinfo=UTC)


def format_timestamp(value: dt.datetime) -> str:
    return value.astimezone(UTC).strftime(_TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class RejectedLine:
    line_number: int
    reason: str


@dataclass(frozen=True)
class ParseResult:
    """A parsed dataset plus the lines that did not make it in."""

    dataset: Dataset
    rejected: tuple[RejectedLine, ...]


def _record_from_json(obj: dict) -> TweetRecord:
    for field in _STR_FIELDS:
        if field not in obj or not isinstance(obj[field], str):
            raise RecordValidationError(field, "missing or not a string")
    for field in _INT_FIELDS:
        if field not in obj or isinstance(obj[field], bool) or not isinstance(obj[field], int):
            raise RecordValidationError(field, "missing or not an integer")
    for field in _BOOL_FIELDS:
        if field not in obj or not isinstance(obj[field], bool):
            raise RecordValidationError(field, "missing or not a boolean")
    for field in ("posted_at", "account_created_at"):
        if field not in obj or not isinstance(obj[field], str):
            raise RecordValidationError(field, "missing or not a string")
        try:
            obj = {**obj, field: parse_timestamp(obj[field])}
        except ValueError:
            raise RecordValidationError(field, f"not a YYYY-MM-DDThh:mm:ssZ timestamp")
    return TweetRecord(
        user_id=obj["user_id"],
        tweet_id=obj["tweet_id"],
        posted_at=obj["posted_at"],
        account_created_at=obj["account_created_at"],
        favourites_count=obj["favourites_count"],
        follower_count=obj["follower_count"],
        friend_count=obj["friend_count"],
        listed_count=obj["listed_count"],
        statuses_count=obj["statuses_count"],
        geo_enabled=obj["geo_enabled"],
        verified=obj["verified"],
    )


def parse_records(
    stream: IO[str] | Iterable[str], *, max_malformed_fraction: float = 0.01
) -> ParseResult:
    """Parse a JSON-lines stream into a validated dataset.

    Malformed lines are collected and reported, never silently dropped.
    If more than `max_malformed_fraction` of non-blank lines are bad,
    the whole stream is rejected with the offending line numbers.
    """
    accepted: list[TweetRecord] = []
    rejected: list[RejectedLine] = []
    act_by_user: dict[UserId, dt.datetime] = {}
    total = 0
    for line_number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        total += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise RecordValidationError("line", "not a JSON object")
            record = validate_record(_record_from_json(obj))
            known = act_by_user.get(record.user_id)
            if known is not None and known != record.account_created_at:
                raise RecordValidationError(
                    "account_created_at", "conflicts with an earlier record of this user"
                )
        except json.JSONDecodeError as exc:
            rejected.append(RejectedLine(line_number, f"invalid JSON: {exc.msg}"))
            continue
        except RecordValidationError as exc:
            rejected.append(RejectedLine(line_number, str(exc)))
            continue
        act_by_user[record.user_id] = record.account_created_at
        accepted.append(record)
    if total and len(rejected) / total > max_malformed_fraction:
        lines = tuple(r.line_number for r in rejected)
        raise MalformedInputError(
            f"{len(rejected)} of {total} lines malformed "
            f"(limit {max_malformed_fraction:.1%}); first bad lines: {lines[:10]}",
            lines,
        )
    return ParseResult(Dataset(accepted), tuple(rejected))


def read_jsonl(path: str | Path, *, max_malformed_fraction: float = 0.01) -> ParseResult:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_records(fh, max_malformed_fraction=max_malformed_fraction)


def record_to_json(record: TweetRecord) -> str:
    return json.dumps(
        {
            "user_id": record.user_id,
            "tweet_id": record.tweet_id,
            "posted_at": format_timestamp(record.posted_at),
            "account_created_at": format_timestamp(record.account_created_at),
            "favourites_count": record.favourites_count,
            "follower_count": record.follower_count,
            "friend_count": record.friend_count,
            "listed_count": record.listed_count,
            "statuses_count": record.statuses_count,
            "geo_enabled": record.geo_enabled,
            "verified": record.verified,
        },
        separators=(",", ":"),
    )


def write_jsonl(records: Iterable[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(record_to_json(record))
            fh.write("\n")


def write_rejections(rejected: Sequence[RejectedLine], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["line_number", "reason"])
        for r in rejected:
            writer.writerow([r.line_number, r.reason])


def filter_min_tweets(data: Dataset, minimum: int = DEFAULT_MIN_TWEETS) -> Dataset:
    """Keep exactly the users with at least `minimum` records."""
    if minimum < 1:
        raise ValueError("minimum must be >= 1")
    keep = {u for u, positions in data.index.items() if len(positions) >= minimum}
    return Dataset(r for r in data.records if r.user_id in keep)


def standardize_per_user(data: Dataset, per_user: int, seed: int) -> Dataset:
    """Sample exactly `per_user` records per user, without replacement.

    Selected records keep their original relative order. Deterministic
    under `seed`.
    """
    if per_user < 1:
        raise ValueError("per_user must be >= 1")
    generator = rng(seed, "standardize")
    keep_positions: list[int] = []
    for user in data.users:
        positions = data.index[user]
        if len(positions) < per_user:
            raise InsufficientRecordsError(user, len(positions), per_user)
        chosen = generator.permutation(len(positions))[:per_user]
        keep_positions.extend(positions[i] for i in chosen)
    keep_positions.sort()
    return Dataset(data.records[i] for i in keep_positions)


@dataclass(frozen=True)
class SplitPair:
    """Disjoint train/test samples over the same closed identity set."""

    train: SampleSet
    test: SampleSet


def train_size_for(count: int, ratio: float) -> int:
    """Per-user train-side size: floor(ratio * count), with at least one
    record forced onto each side."""
    return max(1, min(count - 1, math.floor(ratio * count)))


def split_train_test(
    data: Dataset,
    combination: Sequence[FeatureId],
    ratio: float,
    seed: int,
) -> SplitPair:
    """Per-user stratified split with features extracted under `combination`.

    Every user lands on both sides, so the test-side label set equals the
    train-side label set (closed world). Deterministic under `seed`.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    combo = check_combination(combination)
    if data.n_users == 0:
        raise StratificationError("cannot split an empty dataset")
    generator = rng(seed, "split")
    matrix = data.feature_matrix(combo)
    codes = data.label_codes()
    train_positions: list[np.ndarray] = []
    test_positions: list[np.ndarray] = []
    for user in data.users:
        positions = np.asarray(data.index[user], dtype=np.intp)
        if len(positions) < 2:
            raise StratificationError(
                f"user {user!r} has {len(positions)} record(s); need >= 2 to split"
            )
        perm = generator.permutation(len(positions))
        n_train = train_size_for(len(positions), ratio)
        train_positions.append(positions[perm[:n_train]])
        test_positions.append(positions[perm[n_train:]])
    train_idx = np.concatenate(train_positions)
    test_idx = np.concatenate(test_positions)
    classes = data.users
    return SplitPair(
        train=SampleSet(combo, matrix[train_idx], codes[train_idx], classes),
        test=SampleSet(combo, matrix[test_idx], codes[test_idx], classes),
    )
