"""Domain types: extraction, validation, dataset indexing."""

import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metaprint.errors import InvalidCombinationError, RecordValidationError, ShapeError
from metaprint.model import (
    ALL_FEATURES,
    UTC,
    Dataset,
    FeatureId,
    FeatureVector,
    LabeledSample,
    SampleSet,
    act_from_calendar_fields,
    combination_from_names,
    extract_features,
    validate_record,
)

from conftest import make_record, make_user_records


class TestExtractFeatures:
    def test_act_calendar_decomposition(self):
        record = make_record(account_created_at="2015-10-07T14:03:21Z")
        fv = extract_features(
            record, [FeatureId.ACT_YEAR, FeatureId.ACT_HOUR, FeatureId.ACT_SECOND]
        )
        assert fv.values == (2015.0, 14.0, 21.0)

    def test_boolean_encoding(self):
        record = make_record(geo_enabled=True, verified=False)
        fv = extract_features(record, [FeatureId.GEO_ENABLED, FeatureId.VERIFIED])
        assert fv.values == (1.0, 0.0)

    def test_post_hour(self):
        record = make_record(posted_at="2016-01-02T23:59:59Z")
        fv = extract_features(record, [FeatureId.POST_HOUR])
        assert fv.values == (23.0,)

    def test_counters_copied_verbatim(self):
        record = make_record(friend_count=123, statuses_count=9)
        fv = extract_features(record, [FeatureId.FRIEND_COUNT, FeatureId.STATUSES_COUNT])
        assert fv.values == (123.0, 9.0)

    def test_duplicate_feature_rejected(self):
        with pytest.raises(InvalidCombinationError):
            extract_features(make_record(), [FeatureId.ACT_YEAR, FeatureId.ACT_YEAR])

    def test_empty_combination_rejected(self):
        with pytest.raises(InvalidCombinationError):
            extract_features(make_record(), [])

    def test_pure_function(self):
        record = make_record()
        combo = list(ALL_FEATURES)
        assert extract_features(record, combo) == extract_features(record, combo)

    def test_act_fields_static_per_user(self):
        a, b = make_user_records("u", 2, act="2011-02-03T04:05:06Z")
        act_combo = [
            FeatureId.ACT_YEAR,
            FeatureId.ACT_MONTH,
            FeatureId.ACT_DAY,
            FeatureId.ACT_HOUR,
            FeatureId.ACT_MINUTE,
            FeatureId.ACT_SECOND,
        ]
        assert extract_features(a, act_combo) == extract_features(b, act_combo)

    @given(st.datetimes(min_value=dt.datetime(2006, 1, 1), max_value=dt.datetime(2020, 1, 1)))
    def test_calendar_roundtrip_to_the_second(self, instant):
        instant = instant.replace(microsecond=0, tzinfo=UTC)
        record = make_record(
            account_created_at=instant.strftime("%Y-%m-%dT%H:%M:%SZ"),
            posted_at="2021-01-01T00:00:00Z",
        )
        fv = extract_features(
            record,
            [
                FeatureId.ACT_YEAR,
                FeatureId.ACT_MONTH,
                FeatureId.ACT_DAY,
                FeatureId.ACT_HOUR,
                FeatureId.ACT_MINUTE,
                FeatureId.ACT_SECOND,
            ],
        )
        assert act_from_calendar_fields(*(int(v) for v in fv.values)) == instant


class TestValidateRecord:
    def test_well_formed_identity(self):
        record = make_record()
        assert validate_record(record) is record

    def test_negative_counter_names_field(self):
        with pytest.raises(RecordValidationError) as err:
            validate_record(make_record(follower_count=-1))
        assert err.value.field == "follower_count"

    def test_created_after_posted_names_field(self):
        record = make_record(
            account_created_at="2017-01-01T00:00:00Z", posted_at="2016-01-01T00:00:00Z"
        )
        with pytest.raises(RecordValidationError) as err:
            validate_record(record)
        assert err.value.field == "account_created_at"

    def test_empty_user_id(self):
        with pytest.raises(RecordValidationError) as err:
            validate_record(make_record(user_id=""))
        assert err.value.field == "user_id"

    def test_naive_timestamp_rejected(self):
        import dataclasses

        record = make_record()
        bad = dataclasses.replace(record, posted_at=record.posted_at.replace(tzinfo=None))
        with pytest.raises(RecordValidationError):
            validate_record(bad)


class TestDataset:
    def test_index_consistency(self, two_user_dataset):
        data = two_user_dataset
        assert data.users == ("alice", "bob")
        assert data.n_users == 2
        for user in data.users:
            for pos in data.index[user]:
                assert data.records[pos].user_id == user

    def test_conflicting_act_rejected(self):
        records = make_user_records("u", 2, act="2013-03-01T08:00:00Z")
        records.append(
            make_record(user_id="u", tweet_id="u-t9", account_created_at="2014-01-01T00:00:00Z")
        )
        with pytest.raises(RecordValidationError):
            Dataset(records)

    def test_empty_dataset_allowed(self):
        data = Dataset([])
        assert len(data) == 0 and data.n_users == 0

    def test_cached_matrix_matches_per_record_extraction(self, two_user_dataset):
        data = two_user_dataset
        matrix = data.feature_matrix(ALL_FEATURES)
        for i, record in enumerate(data.records):
            expected = extract_features(record, ALL_FEATURES).values
            assert tuple(matrix[i]) == expected

    def test_label_codes_match_sorted_users(self, two_user_dataset):
        data = two_user_dataset
        codes = data.label_codes()
        for i, record in enumerate(data.records):
            assert data.users[codes[i]] == record.user_id


class TestSampleSet:
    def test_from_samples_roundtrip(self):
        combo = (FeatureId.FRIEND_COUNT, FeatureId.FOLLOWER_COUNT)
        samples = [
            LabeledSample(FeatureVector(combo, (1.0, 2.0)), "b"),
            LabeledSample(FeatureVector(combo, (3.0, 4.0)), "a"),
        ]
        ss = SampleSet.from_samples(samples)
        assert ss.classes == ("a", "b")
        assert len(ss) == 2
        assert ss[0].label == "b" and ss[0].features.values == (1.0, 2.0)

    def test_mixed_combination_rejected(self):
        fv1 = FeatureVector((FeatureId.FRIEND_COUNT,), (1.0,))
        fv2 = FeatureVector((FeatureId.FOLLOWER_COUNT,), (1.0,))
        with pytest.raises(ShapeError):
            SampleSet.from_samples([LabeledSample(fv1, "a"), LabeledSample(fv2, "b")])

    def test_restrict_to_subset(self):
        combo = (FeatureId.FRIEND_COUNT,)
        ss = SampleSet(
            combo,
            np.array([[1.0], [2.0], [3.0]]),
            np.array([0, 1, 2]),
            ("a", "b", "c"),
        )
        sub = ss.restrict_to(["c", "a"])
        assert sub.classes == ("a", "c")
        assert len(sub) == 2
        assert sub.labels() == ("a", "c")

    def test_vector_length_mismatch(self):
        with pytest.raises(ShapeError):
            FeatureVector((FeatureId.FRIEND_COUNT,), (1.0, 2.0))


def test_combination_from_names_unknown():
    with pytest.raises(InvalidCombinationError):
        combination_from_names(["friend_count", "nope"])
