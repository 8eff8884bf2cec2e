"""metaprint: account identification from tweet-style metadata.

Fingerprints accounts with three multi-class classifiers over fourteen
metadata features, searches feature combinations, quantifies obfuscation
resistance, and scales to large identity sets via partitioned
classification. All experiments are seed-deterministic.
"""

from .errors import MetaprintError
from .evaluate import ExperimentConfig, MetricsReport, bootstrap_run
from .ingest import parse_records, read_jsonl, split_train_test
from .learn import HyperParams, classify, predict_proba, train
from .model import (
    ALL_FEATURES,
    Dataset,
    FeatureId,
    FeatureVector,
    LabeledSample,
    SampleSet,
    TweetRecord,
    extract_features,
    validate_record,
)
from .synth import PopulationSpec, generate_population

__version__ = "0.1.0"

__all__ = [
    "ALL_FEATURES",
    "Dataset",
    "ExperimentConfig",
    "FeatureId",
    "FeatureVector",
    "HyperParams",
    "LabeledSample",
    "MetaprintError",
    "MetricsReport",
    "PopulationSpec",
    "SampleSet",
    "TweetRecord",
    "bootstrap_run",
    "classify",
    "extract_features",
    "generate_population",
    "parse_records",
    "predict_proba",
    "read_jsonl",
    "split_train_test",
    "train",
    "validate_record",
    "__version__",
]
