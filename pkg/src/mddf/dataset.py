"""Tabular dataset ingestion: CSV and LIBSVM-style sparse files.

Parsed data is held densely: float64 feature matrix plus 0-based integer
class labels. Categorical feature columns are ordinal-encoded in order of
first appearance (trees split on thresholds over the codes); one-hot
expansion is available behind a flag. Source labels of any type are mapped
to dense indices 0..s-1 in sorted order, and the original label values are
kept so separately parsed train/test files can be reconciled by name.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

HOLDOUT_KINDS = ("holdout_fraction", "stratified_holdout")
SPLIT_KINDS = ("presplit_files",) + HOLDOUT_KINDS


@dataclass
class Dataset:
    """Dense classification dataset.

    features: (m, n) float64, finite.
    labels: (m,) int64 in {0..n_classes-1}.
    label_names: original label value per class index (length n_classes).
    feature_encodings: feature name -> category list, for ordinal-encoded
    columns (category position == code).
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: list[str] | None = None
    source_format: str = "csv"
    label_names: list[str] = field(default_factory=list)
    feature_encodings: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        if self.features.ndim != 2 or self.features.shape[0] < 1 or self.features.shape[1] < 1:
            raise DataError(f"bad feature matrix shape {self.features.shape}")
        if not np.isfinite(self.features).all():
            raise DataError("features contain NaN or infinite values")
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("labels misaligned with features")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise DataError("label index out of range")


@dataclass
class SplitSpec:
    """How to produce a train/test division.

    `fraction` is the held-out share and only applies to the holdout kinds;
    `presplit_files` marks data that arrives already divided.
    """

    kind: str = "stratified_holdout"
    fraction: float = 0.2
    seed: int = 42

    def validate(self) -> None:
        if self.kind not in SPLIT_KINDS:
            raise ConfigError(f"unknown split kind {self.kind!r}")
        if self.kind in HOLDOUT_KINDS and not (0.0 < self.fraction < 1.0):
            raise ConfigError(f"holdout fraction must be in (0,1), got {self.fraction}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")


def _parse_float(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"{where}: cannot parse numeric value {token!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite numeric value {token!r}")
    return value


def _encode_labels(raw_labels: list[str], where: str) -> tuple[np.ndarray, list[str]]:
    """Map raw label strings to dense 0-based indices, sorted numerically
    when every label parses as a number, lexicographically otherwise."""
    unique = sorted(set(raw_labels))
    try:
        unique.sort(key=float)
    except ValueError:
        pass
    if len(unique) < 2:
        raise DataError(f"{where}: dataset has a single class {unique!r}")
    index = {name: i for i, name in enumerate(unique)}
    labels = np.fromiter((index[v] for v in raw_labels), dtype=np.int64, count=len(raw_labels))
    return labels, unique


def parse_csv(
    path: str | os.PathLike,
    label_column: str | int = -1,
    has_header: bool = True,
    delimiter: str = ",",
    one_hot: bool = False,
) -> Dataset:
    """Parse an RFC-4180-style CSV file into a Dataset.

    `label_column` may be a header name or a column index (negative counts
    from the end). A column is numeric only if every cell parses as a finite
    float; all-text columns are ordinal-encoded by first appearance; mixed
    columns are an error, as are empty cells (no imputation).
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")

    if has_header:
        header, rows = rows[0], rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    else:
        header = [f"col_{i}" for i in range(len(rows[0]))]

    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")

    if isinstance(label_column, int):
        label_idx = label_column if label_column >= 0 else width + label_column
        if not (0 <= label_idx < width):
            raise DataError(f"{path}: label column index {label_column} out of range")
    else:
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found in header")
        label_idx = header.index(label_column)

    raw_labels = [row[label_idx].strip() for row in rows]
    labels, label_names = _encode_labels(raw_labels, str(path))

    feature_cols = [j for j in range(width) if j != label_idx]
    m = len(rows)
    columns: list[np.ndarray] = []
    names: list[str] = []
    encodings: dict[str, list[str]] = {}

    for j in feature_cols:
        cells = [row[j].strip() for row in rows]
        if any(c == "" for c in cells):
            bad = cells.index("")
            raise DataError(f"{path}: missing value in column {header[j]!r}, row {bad + 1}")
        parsed: list[float] = []
        numeric = True
        for c in cells:
            try:
                v = float(c)
            except ValueError:
                numeric = False
                break
            if not math.isfinite(v):
                raise DataError(f"{path}: non-finite value {c!r} in column {header[j]!r}")
            parsed.append(v)
        if numeric:
            columns.append(np.asarray(parsed, dtype=np.float64))
            names.append(header[j])
            continue
        # Categorical column: every cell must be non-numeric text, otherwise
        # the column looks numeric and the odd cell out is a parse error.
        n_numeric = sum(1 for c in cells if _is_floatish(c))
        if n_numeric:
            raise DataError(
                f"{path}: column {header[j]!r} mixes numeric and text cells "
                f"({n_numeric} numeric of {m})"
            )
        categories: list[str] = []
        code_of: dict[str, int] = {}
        codes = np.empty(m, dtype=np.float64)
        for i, c in enumerate(cells):
            if c not in code_of:
                code_of[c] = len(categories)
                categories.append(c)
            codes[i] = code_of[c]
        if one_hot:
            for k, cat in enumerate(categories):
                columns.append((codes == k).astype(np.float64))
                names.append(f"{header[j]}={cat}")
        else:
            columns.append(codes)
            names.append(header[j])
            encodings[header[j]] = categories

    if not columns:
        raise DataError(f"{path}: no feature columns besides the label")

    features = np.column_stack(columns)
    ds = Dataset(
        features=features,
        labels=labels,
        n_classes=len(label_names),
        feature_names=names,
        source_format="csv",
        label_names=label_names,
        feature_encodings=encodings,
    )
    ds.validate()
    return ds


def _is_floatish(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_csv(data: Dataset, path: str | os.PathLike, delimiter: str = ",") -> None:
    """Serialize a Dataset back to CSV (encoded feature values, original labels)."""
    names = data.feature_names or [f"col_{i}" for i in range(data.n_features)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(list(names) + ["label"])
        for i in range(data.n_samples):
            row = [repr(float(v)) for v in data.features[i]]
            row.append(str(data.label_names[data.labels[i]]))
            writer.writerow(row)


def parse_libsvm(path: str | os.PathLike, n_features: int | None = None) -> Dataset:
    """Parse a LIBSVM-style sparse file: `label idx:val ...`, 1-based indices.

    Missing indices fill with 0.0; the width is the maximum index seen unless
    `n_features` pins it (required when train/test files may not exercise the
    same trailing columns).
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    raw_labels: list[str] = []
    entries: list[list[tuple[int, float]]] = []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{path}:{lineno}"
            tokens = line.split()
            label_value = _parse_float(tokens[0], where)
            raw_labels.append(_canonical_label(label_value))
            pairs: list[tuple[int, float]] = []
            prev_index = 0
            for tok in tokens[1:]:
                if ":" not in tok:
                    raise DataError(f"{where}: bad feature token {tok!r}")
                idx_s, val_s = tok.split(":", 1)
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise DataError(f"{where}: bad feature index {idx_s!r}") from None
                if idx == 0:
                    raise DataError(f"{where}: feature indices are 1-based, got 0")
                if idx <= prev_index:
                    raise DataError(f"{where}: non-monotone feature index {idx}")
                prev_index = idx
                pairs.append((idx, _parse_float(val_s, where)))
            if pairs:
                max_index = max(max_index, pairs[-1][0])
            entries.append(pairs)

    if not entries:
        raise DataError(f"{path}: empty file")
    n = n_features if n_features is not None else max_index
    if n < 1:
        raise DataError(f"{path}: no feature indices found and n_features not given")
    if max_index > n:
        raise DataError(f"{path}: feature index {max_index} exceeds n_features={n}")

    features = np.zeros((len(entries), n), dtype=np.float64)
    for i, pairs in enumerate(entries):
        for idx, val in pairs:
            features[i, idx - 1] = val

    labels, label_names = _encode_labels(raw_labels, str(path))
    ds = Dataset(
        features=features,
        labels=labels,
        n_classes=len(label_names),
        feature_names=[f"f{j + 1}" for j in range(n)],
        source_format="libsvm",
        label_names=label_names,
    )
    ds.validate()
    return ds


def _canonical_label(value: float) -> str:
    return str(int(value)) if value == int(value) else repr(value)


def _take(data: Dataset, index: np.ndarray) -> Dataset:
    return Dataset(
        features=data.features[index],
        labels=data.labels[index],
        n_classes=data.n_classes,
        feature_names=data.feature_names,
        source_format=data.source_format,
        label_names=data.label_names,
        feature_encodings=data.feature_encodings,
    )


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Divide into (train, test) as `spec` describes; deterministic under its seed."""
    spec.validate()
    if spec.kind == "presplit_files":
        raise ConfigError("presplit_files data is loaded as two files, not split()")
    m = data.n_samples
    rng = np.random.default_rng(spec.seed)

    if spec.kind == "holdout_fraction":
        n_test = int(round(spec.fraction * m))
        if not (0 < n_test < m):
            raise DataError(f"holdout of {n_test} samples from {m} leaves an empty side")
        perm = rng.permutation(m)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
    else:  # stratified_holdout
        test_parts = []
        train_parts = []
        for c in range(data.n_classes):
            members = np.flatnonzero(data.labels == c)
            if members.size < 2:
                raise DataError(
                    f"class {c} has {members.size} sample(s); "
                    "stratified holdout needs at least 2 per class"
                )
            n_test_c = int(round(spec.fraction * members.size))
            n_test_c = min(max(n_test_c, 1), members.size - 1)
            shuffled = rng.permutation(members)
            test_parts.append(shuffled[:n_test_c])
            train_parts.append(shuffled[n_test_c:])
        test_idx = np.sort(np.concatenate(test_parts))
        train_idx = np.sort(np.concatenate(train_parts))

    return _take(data, np.sort(train_idx)), _take(data, np.sort(test_idx))
