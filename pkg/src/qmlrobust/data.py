"""CSV ingestion, feature encoding/normalization, and deterministic splits.

The split layout follows the experiment protocol: 20% of the samples are
held out for the fine-tune/attack set, and the remaining 80% is divided
60/20/20 into train/validation/test. All sizes are floored, with the
remainder going to train.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# floor(0.2 * n) fine-tune portion, then 60/20/20 of the rest
FINETUNE_SHARE = 0.2
VAL_SHARE = 0.2
TEST_SHARE = 0.2


@dataclass
class RawDataset:
    column_names: list[str]
    rows: list[list[float | str]]
    label_column: str


@dataclass
class FeatureMatrix:
    """Normalized feature rows with aligned labels in {-1, +1}."""

    values: np.ndarray  # (n_samples, n_features) float64
    labels: np.ndarray  # (n_samples,) int, entries -1 or +1

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class DatasetSplits:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    finetune_idx: np.ndarray


def load_csv(path: str | Path, label_column: str) -> RawDataset:
    """Parse a plain comma-separated file: header line, then one sample per line.

    Cells are parsed as numbers where possible and kept as categorical text
    otherwise. Empty cells are an error (no imputation).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header line") from None
        header = [name.strip() for name in header]
        rows: list[list[float | str]] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(record)}"
                )
            rows.append([_parse_cell(cell, path, lineno) for cell in record])
    if not rows:
        raise ValueError(f"{path}: no samples (header only)")
    if label_column not in header:
        raise ValueError(f"{path}: label column {label_column!r} not in header {header}")
    return RawDataset(column_names=header, rows=rows, label_column=label_column)


def _parse_cell(cell: str, path, lineno: int) -> float | str:
    text = cell.strip()
    if text == "":
        raise ValueError(f"{path}:{lineno}: empty cell (missing values are not supported)")
    try:
        return float(text)
    except ValueError:
        return text


def encode_and_normalize(raw: RawDataset) -> FeatureMatrix:
    """Integer-code categorical columns, min-max scale everything to [0,1].

    Categorical codes follow first-appearance order; constant columns map
    to all-zeros. The label column must carry exactly two classes and is
    remapped to {-1, +1} (for numeric labels the smaller value becomes -1,
    so {0,1} labels become {-1,+1}).
    """
    label_j = raw.column_names.index(raw.label_column)
    feature_cols = [j for j in range(len(raw.column_names)) if j != label_j]
    n = len(raw.rows)

    values = np.empty((n, len(feature_cols)))
    for out_j, j in enumerate(feature_cols):
        column = [row[j] for row in raw.rows]
        values[:, out_j] = _encode_column(column, raw.column_names[j])
    values = _minmax_scale(values)

    labels = _encode_labels([row[label_j] for row in raw.rows], raw.label_column)
    return FeatureMatrix(values=values, labels=labels)


def _encode_column(column: list[float | str], name: str) -> np.ndarray:
    numeric = [isinstance(v, float) for v in column]
    if all(numeric):
        out = np.asarray(column, dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"column {name!r} contains non-finite values")
        return out
    if any(numeric):
        raise ValueError(f"column {name!r} mixes numeric and text cells")
    codes: dict[str, int] = {}
    for v in column:
        codes.setdefault(v, len(codes))
    return np.asarray([codes[v] for v in column], dtype=float)


def _minmax_scale(values: np.ndarray) -> np.ndarray:
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    span = hi - lo
    scaled = np.zeros_like(values)
    live = span > 0
    scaled[:, live] = (values[:, live] - lo[live]) / span[live]
    return scaled


def _encode_labels(column: list[float | str], name: str) -> np.ndarray:
    distinct: dict[float | str, None] = {}
    for v in column:
        distinct.setdefault(v)
    if len(distinct) != 2:
        raise ValueError(
            f"label column {name!r} must have exactly two classes, found {len(distinct)}"
        )
    keys = list(distinct)
    if all(isinstance(k, float) for k in keys):
        keys = sorted(keys)  # numeric labels: smaller -> -1, so 0/1 -> -1/+1
    mapping = {keys[0]: -1, keys[1]: +1}
    return np.asarray([mapping[v] for v in column], dtype=int)


def shuffle_and_split(data: FeatureMatrix, seed: int) -> DatasetSplits:
    """Seeded permutation, then carve out finetune / train / val / test index sets.

    The index sets are stored in ascending order; membership is what the
    shuffle decides. Identical (data, seed) always give identical splits.
    """
    n = data.n_samples
    if n < 10:
        raise ValueError(f"need at least 10 samples to populate all four splits, got {n}")
    n_finetune = math.floor(FINETUNE_SHARE * n)
    rest = n - n_finetune
    n_val = math.floor(VAL_SHARE * rest)
    n_test = math.floor(TEST_SHARE * rest)
    n_train = rest - n_val - n_test

    perm = np.random.default_rng(seed).permutation(n)
    cuts = np.cumsum([n_train, n_val, n_test])
    return DatasetSplits(
        train_idx=np.sort(perm[: cuts[0]]),
        val_idx=np.sort(perm[cuts[0] : cuts[1]]),
        test_idx=np.sort(perm[cuts[1] : cuts[2]]),
        finetune_idx=np.sort(perm[cuts[2] :]),
    )


def subset(data: FeatureMatrix, idx: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(values=data.values[idx].copy(), labels=data.labels[idx].copy())


def make_separable(n_samples: int, n_features: int, seed: int) -> FeatureMatrix:
    """Two well-separated Gaussian blobs in [0,1]^d, labels balanced in {-1,+1}.

    Desk-scale benchmark for the end-to-end checks: easy enough for both
    classifiers to learn, with enough margin that strong input noise
    visibly degrades them.
    """
    rng = np.random.default_rng(seed)
    n_pos = n_samples // 2
    labels = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_samples - n_pos, dtype=int)])
    centers = np.where(labels[:, None] > 0, 0.72, 0.28)
    values = centers + 0.07 * rng.standard_normal((n_samples, n_features))
    return FeatureMatrix(values=np.clip(values, 0.0, 1.0), labels=labels)


def write_labeled_csv(data: FeatureMatrix, path: str | Path, label_column: str = "class") -> None:
    """Serialize a FeatureMatrix as a raw CSV with 0/1 labels (CLI input format)."""
    path = Path(path)
    header = [f"f{j}" for j in range(data.n_features)] + [label_column]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, label in zip(data.values, data.labels):
            writer.writerow([format(v, ".17e") for v in row] + [1 if label > 0 else 0])
