"""Tabular labeled data: CSV ingestion, z-score normalization, label noise, splits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or inconsistent datasets."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    label_names: list[str]
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        y = np.asarray(self.labels, dtype=np.int64)
        ids = np.arange(X.shape[0]) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        if y.shape != (X.shape[0],) or ids.shape != (X.shape[0],):
            raise DataError("features, labels and row_ids disagree on row count")
        if X.shape[1] != len(self.feature_names):
            raise DataError("feature_names length does not match feature count")
        if y.size and (y.min() < 0 or y.max() >= len(self.label_names)):
            raise DataError("label codes outside 0..L-1")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain missing or non-finite values")
        if np.unique(ids).size != ids.size:
            raise DataError("row_ids are not unique")
        X.flags.writeable = False
        y.flags.writeable = False
        ids.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "row_ids", ids)
        object.__setattr__(self, "feature_names", list(self.feature_names))
        object.__setattr__(self, "label_names", list(self.label_names))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    def take(self, idx) -> "Dataset":
        """Row subset by positional index or boolean mask; ids are preserved."""
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names, self.label_names, self.row_ids[idx])

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.feature_names, self.label_names, self.row_ids)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.label_names, self.row_ids)

    def to_csv(self, path, label_column: str = "label", include_row_id: bool = False) -> None:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = list(self.feature_names) + [label_column]
            if include_row_id:
                header.append("__row_id")
            w.writerow(header)
            for i in range(self.n_rows):
                row = [repr(float(v)) for v in self.features[i]] + [self.label_names[self.labels[i]]]
                if include_row_id:
                    row.append(str(int(self.row_ids[i])))
                w.writerow(row)


def _resolve_label_column(header: list[str], label_column) -> int:
    if isinstance(label_column, str) and label_column in header:
        return header.index(label_column)
    try:
        idx = int(label_column)
    except (TypeError, ValueError):
        raise DataError(f"label column {label_column!r} not found in header") from None
    if not -len(header) <= idx < len(header):
        raise DataError(f"label column index {idx} out of range for {len(header)} columns")
    return idx % len(header)


def load_csv(path, label_column) -> Dataset:
    """Read a headed, comma-separated file; the label column may be a name or an index.

    Labels are integer-coded in order of first appearance. A ``__row_id``
    column, when present, supplies the row ids instead of 0..n-1.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path} has a header but no data rows")
    lab = _resolve_label_column(header, label_column)
    id_col = header.index("__row_id") if "__row_id" in header and header[lab] != "__row_id" else None
    feat_cols = [j for j in range(len(header)) if j != lab and j != id_col]

    X = np.empty((len(body), len(feat_cols)))
    codes: dict[str, int] = {}
    y = np.empty(len(body), dtype=np.int64)
    ids = np.arange(len(body), dtype=np.int64)
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        for out_j, j in enumerate(feat_cols):
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"row {i}, column {header[j]!r}: cannot parse {cell!r} as a number") from None
            if not math.isfinite(v):
                raise DataError(f"row {i}, column {header[j]!r}: missing or non-finite value {cell!r}")
            X[i - 1, out_j] = v
        name = row[lab].strip()
        y[i - 1] = codes.setdefault(name, len(codes))
        if id_col is not None:
            try:
                ids[i - 1] = int(row[id_col])
            except ValueError:
                raise DataError(f"row {i}: bad __row_id {row[id_col]!r}") from None
    return Dataset(X, y, [header[j] for j in feat_cols], list(codes), ids)


@dataclass(frozen=True)
class NormalizationParams:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        if mean.shape != scale.shape or mean.ndim != 1:
            raise DataError("mean and scale must be 1-D and the same length")
        if np.any(scale <= 0):
            raise DataError("normalization scale must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.size:
            raise DataError(f"expected {self.mean.size} features, got {X.shape[-1]}")
        return (X - self.mean) / self.scale

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) * self.scale + self.mean


def fit_normalization(data: Dataset) -> NormalizationParams:
    """Per-feature mean and population standard deviation (zero spread -> scale 1)."""
    if data.n_rows < 1:
        raise DataError("cannot fit normalization on an empty dataset")
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    # constant columns can show a roundoff-sized std, so test the range instead
    constant = np.ptp(data.features, axis=0) == 0
    return NormalizationParams(mean, np.where(constant | (std <= 0), 1.0, std))


def apply_normalization(data: Dataset, params: NormalizationParams) -> Dataset:
    return data.with_features(params.transform(data.features))


@dataclass(frozen=True)
class NoiseSpec:
    fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise DataError(f"noise fraction must be in [0, 1], got {self.fraction}")


def inject_label_noise(data: Dataset, spec: NoiseSpec) -> tuple[Dataset, list[int]]:
    """Relabel round(fraction * n) distinct rows to a different, uniformly chosen label.

    Returns the corrupted dataset and the sorted row ids that were changed.
    """
    n_flip = round_half_up(spec.fraction * data.n_rows)
    if n_flip == 0:
        return data, []
    L = data.n_labels
    if L < 2:
        raise DataError("label noise needs at least two labels")
    rng = np.random.default_rng(spec.seed)
    pos = np.sort(rng.choice(data.n_rows, size=n_flip, replace=False))
    shift = rng.integers(1, L, size=n_flip)
    labels = data.labels.copy()
    labels[pos] = (labels[pos] + shift) % L
    return data.with_labels(labels), [int(r) for r in data.row_ids[pos]]


def _stratified_test_counts(labels: np.ndarray, n_labels: int, n_test: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=n_labels)
    # keep at least one row of every present label in train
    cap = np.maximum(counts - 1, 0)
    if n_test > cap.sum():
        raise DataError(f"cannot stratify {n_test} test rows while keeping every label in train")
    quota = counts * (n_test / labels.size)
    alloc = np.minimum(np.floor(quota).astype(np.int64), cap)
    remainder = quota - alloc
    while alloc.sum() < n_test:
        room = alloc < cap
        order = np.lexsort((np.arange(n_labels), -np.where(room, remainder, -np.inf)))
        j = order[0]
        alloc[j] += 1
        remainder[j] -= 1.0
    return alloc


def train_test_split(data: Dataset, test_fraction: float, seed: int = 0, stratified: bool = True):
    """Disjoint (train, test) partition, deterministic per seed.

    The test size is round-half-up(test_fraction * n). Stratified mode spreads
    the test rows over labels by largest remainder and never empties a label
    from the training side.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = data.n_rows
    n_test = round_half_up(test_fraction * n)
    if n_test < 1 or n_test >= n:
        raise DataError(f"test_fraction {test_fraction} on {n} rows leaves an empty side")
    rng = np.random.default_rng(seed)
    if stratified:
        alloc = _stratified_test_counts(data.labels, data.n_labels, n_test)
        test_idx = []
        for c in range(data.n_labels):
            members = np.flatnonzero(data.labels == c)
            if alloc[c]:
                test_idx.append(rng.choice(members, size=alloc[c], replace=False))
        test = np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, dtype=np.int64)
    else:
        test = np.sort(rng.choice(n, size=n_test, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return data.take(~mask), data.take(mask)


def feature_columns(data: Dataset, subset: Sequence[int]) -> np.ndarray:
    return np.ascontiguousarray(data.features[:, list(subset)])
