"""CSV and JSON persistence for series, manifests, feature sets and models."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES


def write_series_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in np.asarray(values, dtype=float):
            fh.write(f"{v:.17g}\n")


def read_series_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = [r for r in reader if r]
    try:
        start = [] if header[0].strip().lower() == "value" else [float(header[0])]
        return np.array(start + [float(r[0]) for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: not a single-column numeric CSV ({exc})") from None


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_feature_csv(path, rows, labels) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(FEATURE_NAMES) + ",class_index\n")
        for row, label in zip(rows, labels):
            cells = [f"{v:.17g}" for v in row] + ["" if label is None else str(int(label))]
            fh.write(",".join(cells) + "\n")


def read_feature_csv(path) -> tuple[np.ndarray, list[int | None]]:
    """Feature matrix and class labels (``None`` where unlabelled)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "class_index":
            raise ValueError(f"{path}: expected a header ending in 'class_index'")
        X, y = [], []
        for r in reader:
            if not r:
                continue
            X.append([float(v) for v in r[:-1]])
            y.append(int(r[-1]) if r[-1].strip() else None)
    return np.array(X, dtype=float).reshape(len(X), len(header) - 1), y


def resolve_relative(base, path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(base).parent / p
