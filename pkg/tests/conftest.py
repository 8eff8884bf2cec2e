"""Shared test fixtures and builders."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from metaprint.model import UTC, Dataset, FeatureId, SampleSet, TweetRecord


def ts(text: str) -> dt.datetime:
    return dt.datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=UTC)


def make_record(
    user_id: str = "u1",
    tweet_id: str = "t1",
    posted_at: str = "2016-01-02T23:59:59Z",
    account_created_at: str = "2015-10-07T14:03:21Z",
    favourites_count: int = 3,
    follower_count: int = 10,
    friend_count: int = 7,
    listed_count: int = 1,
    statuses_count: int = 42,
    geo_enabled: bool = True,
    verified: bool = False,
) -> TweetRecord:
    return TweetRecord(
        user_id=user_id,
        tweet_id=tweet_id,
        posted_at=ts(posted_at),
        account_created_at=ts(account_created_at),
        favourites_count=favourites_count,
        follower_count=follower_count,
        friend_count=friend_count,
        listed_count=listed_count,
        statuses_count=statuses_count,
        geo_enabled=geo_enabled,
        verified=verified,
    )


def make_user_records(
    user_id: str,
    count: int,
    act: str = "2015-10-07T14:03:21Z",
    start_minute: int = 0,
    **fields,
) -> list[TweetRecord]:
    """`count` records for one user with distinct post times."""
    records = []
    for i in range(count):
        total = start_minute + i
        posted = f"2016-01-{(total // 1440) + 2:02d}T{(total // 60) % 24:02d}:{total % 60:02d}:00Z"
        records.append(
            make_record(
                user_id=user_id,
                tweet_id=f"{user_id}-t{i}",
                posted_at=posted,
                account_created_at=act,
                statuses_count=100 + i,
                **fields,
            )
        )
    return records


def sample_set(
    points: list[tuple[float, ...]],
    labels: list[str],
    combination: tuple[FeatureId, ...] = (FeatureId.FRIEND_COUNT, FeatureId.FOLLOWER_COUNT),
) -> SampleSet:
    """Array-backed samples from explicit points (labels as raw strings)."""
    classes = tuple(sorted(set(labels)))
    code_of = {c: i for i, c in enumerate(classes)}
    combo = combination[: len(points[0])]
    return SampleSet(
        combo,
        np.asarray(points, dtype=np.float64),
        np.asarray([code_of[l] for l in labels], dtype=np.intp),
        classes,
    )


@pytest.fixture
def two_user_dataset() -> Dataset:
    records = make_user_records("alice", 4, act="2013-03-01T08:00:00Z", friend_count=5)
    records += make_user_records("bob", 4, act="2014-06-15T20:30:45Z", friend_count=50)
    return Dataset(records)
