"""CSV and run-manifest writers with byte-stable output."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import FeatureId


def combination_label(combination: Sequence[FeatureId]) -> str:
    return "+".join(f.value for f in combination)


def format_cell(value) -> str:
    if isinstance(value, FeatureId):
        return value.value
    if isinstance(value, (tuple, list)):
        return combination_label(value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def write_manifest(path: str | Path, payload: dict) -> None:
    """Run manifest: resolved parameters, seed, and output names.

    Deliberately timestamp-free so a rerun with the same seed produces a
    byte-identical manifest.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
