"""Dataset container, CSV ingestion, splitting, and imbalance manipulation.

Labels are binary with 1 = minority/positive and 0 = majority/negative.
All operations are pure: given the same inputs and seed they return the
same result, and nothing mutates its arguments.
"""

import csv
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import (
    as_binary_labels,
    as_float_matrix,
    rng_from,
    round_half_up,
)
from .exceptions import (
    ClassTooSmallError,
    EmptyFileError,
    LevelNotBelowCurrentError,
    MissingColumnError,
    NonNumericCellError,
    TooFewMinorityRemainingError,
)

# SMOTE with the default k=5 needs six minority instances to stay defined,
# so imbalance manipulation never drops the minority below this.
MIN_MINORITY_AFTER_LEVEL = 6


@dataclass(frozen=True)
class Dataset:
    """An imbalanced binary-classification dataset.

    features : (n, d) float64 matrix, all values finite
    labels   : (n,) ints in {0, 1}; 1 marks the minority/positive class
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    source_name: str = ""
    label_name: str = "label"

    def __post_init__(self):
        X = as_float_matrix(self.features, "features")
        y = as_binary_labels(self.labels, "labels")
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"features have {X.shape[0]} rows but labels have {y.shape[0]}"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("dataset must have at least one row and one feature")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise ValueError(
                f"{len(names)} feature names for {X.shape[1]} features"
            )
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def minority_count(self):
        return int(np.count_nonzero(self.labels == 1))

    @property
    def majority_count(self):
        return int(np.count_nonzero(self.labels == 0))

    @property
    def minority_fraction(self):
        return self.minority_count / len(self)

    def subset(self, indices):
        """New Dataset restricted to `indices` (order preserved)."""
        idx = np.asarray(indices, dtype=np.intp)
        return replace(
            self,
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
        )

    def with_features(self, features):
        return replace(self, features=np.asarray(features, dtype=np.float64))


@dataclass(frozen=True)
class SplitResult:
    """Stratified train/test partition plus the indices that produced it."""

    train: Dataset
    test: Dataset
    seed: int
    train_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)


class Standardizer(BaseEstimator, TransformerMixin):
    """Z-score scaler using population statistics of the fitted data.

    Constant features (population std 0) are centered but not scaled,
    so the transform never divides by zero.
    """

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X")
        self.means_ = X.mean(axis=0)
        self.stds_ = X.std(axis=0)  # population std (ddof=0)
        self.scale_ = np.where(self.stds_ > 0.0, self.stds_, 1.0)
        return self

    def transform(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.means_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} features, standardizer was fit on "
                f"{self.means_.shape[0]}"
            )
        return (X - self.means_) / self.scale_


def standardize(train, others=()):
    """Fit a Standardizer on `train` and transform train plus `others`.

    Returns (standardizer, [train_transformed, *others_transformed]).
    Test-time datasets are always transformed with the training statistics.
    """
    scaler = Standardizer().fit(train.features)
    transformed = [train.with_features(scaler.transform(train.features))]
    transformed += [d.with_features(scaler.transform(d.features)) for d in others]
    return scaler, transformed


def load_csv(path, label_column="label", positive_value="1"):
    """Read an RFC-4180-style CSV with a header row into a Dataset.

    Every non-label column must parse as a finite float. The label is 1
    where the cell equals `positive_value`, else 0. Row order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyFileError(f"{path}: no header row")
    header, data_rows = rows[0], rows[1:]
    if not data_rows:
        raise EmptyFileError(f"{path}: no data rows")
    if label_column not in header:
        raise MissingColumnError(
            f"{path}: label column {label_column!r} not in header {header}"
        )
    label_pos = header.index(label_column)
    feature_names = tuple(c for i, c in enumerate(header) if i != label_pos)

    n, d = len(data_rows), len(feature_names)
    X = np.empty((n, d), dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    for i, row in enumerate(data_rows):
        if len(row) != len(header):
            raise NonNumericCellError(i + 1, "<row width>", ",".join(row))
        y[i] = 1 if row[label_pos] == positive_value else 0
        j = 0
        for pos, cell in enumerate(row):
            if pos == label_pos:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericCellError(i + 1, header[pos], cell) from None
            if not np.isfinite(value):
                raise NonNumericCellError(i + 1, header[pos], cell)
            X[i, j] = value
            j += 1

    if len(np.unique(y)) < 2:
        warnings.warn(
            f"{path}: only one class present in column {label_column!r}",
            UserWarning,
            stacklevel=2,
        )
    return Dataset(
        features=X,
        labels=y,
        feature_names=feature_names,
        source_name=os.path.basename(str(path)),
        label_name=label_column,
    )


def save_csv(dataset, path):
    """Write a Dataset as CSV: feature columns first, label column last."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [dataset.label_name])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def _apportion_train_counts(class_sizes, train_fraction):
    """Largest-remainder apportionment of per-class training counts.

    Total seats = round(train_fraction * N); each class gets the floor of
    its quota, leftover seats go to the largest fractional remainders,
    remainder ties resolved toward the larger class.
    """
    total = round_half_up(train_fraction * sum(class_sizes))
    quotas = [train_fraction * n for n in class_sizes]
    counts = [int(np.floor(q)) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    leftover = total - sum(counts)
    # Sort classes by (remainder desc, class size desc); stable for equal keys.
    order = sorted(
        range(len(class_sizes)),
        key=lambda c: (-remainders[c], -class_sizes[c]),
    )
    for c in order[:leftover]:
        counts[c] += 1
    return counts


def stratified_split(dataset, train_fraction, seed):
    """Split into train/test keeping per-class proportions.

    Per-class train counts follow the largest-remainder rule; instances
    are chosen uniformly at random within each class. Deterministic for a
    fixed seed; row order inside each part follows the original dataset.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    y = dataset.labels
    class_indices = [np.flatnonzero(y == c) for c in (0, 1)]
    for c, idx in enumerate(class_indices):
        if len(idx) < 2:
            raise ClassTooSmallError(
                f"class {c} has {len(idx)} instances; need at least 2 to split"
            )
    counts = _apportion_train_counts([len(i) for i in class_indices], train_fraction)

    rng = rng_from(seed)
    train_idx = []
    for idx, count in zip(class_indices, counts):
        chosen = rng.choice(idx, size=count, replace=False)
        train_idx.append(chosen)
    train_idx = np.sort(np.concatenate(train_idx))
    mask = np.zeros(len(dataset), dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)

    return SplitResult(
        train=dataset.subset(train_idx),
        test=dataset.subset(test_idx),
        seed=int(seed),
        train_indices=train_idx,
        test_indices=test_idx,
    )


def apply_imbalance_level(dataset, level, seed):
    """Down-sample the minority class so its fraction becomes `level`.

    Majority instances are all retained; the minority is sampled uniformly
    without replacement down to round(level/(1-level) * majority_count).
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if level >= dataset.minority_fraction:
        raise LevelNotBelowCurrentError(
            f"requested level {level} is not below the current minority "
            f"fraction {dataset.minority_fraction:.4f}"
        )
    n_keep = round_half_up(level / (1.0 - level) * dataset.majority_count)
    if n_keep < MIN_MINORITY_AFTER_LEVEL:
        raise TooFewMinorityRemainingError(
            f"level {level} leaves {n_keep} minority instances; "
            f"need at least {MIN_MINORITY_AFTER_LEVEL}"
        )
    minority_idx = np.flatnonzero(dataset.labels == 1)
    majority_idx = np.flatnonzero(dataset.labels == 0)
    rng = rng_from(seed)
    kept_minority = rng.choice(minority_idx, size=min(n_keep, len(minority_idx)), replace=False)
    kept = np.sort(np.concatenate([majority_idx, kept_minority]))
    return dataset.subset(kept)


def generate_synthetic(n_major, n_minor, d=2, separation=3.0, seed=0):
    """Two isotropic unit-variance Gaussian clusters.

    The majority cluster sits at the origin, the minority cluster at
    `separation` along the first axis. Deterministic given the seed.
    """
    if n_major < 1 or n_minor < 1 or d < 1:
        raise ValueError("counts and dimension must be >= 1")
    rng = rng_from(seed)
    X_major = rng.standard_normal((n_major, d))
    X_minor = rng.standard_normal((n_minor, d))
    X_minor[:, 0] += separation
    X = np.vstack([X_major, X_minor])
    y = np.concatenate([np.zeros(n_major, dtype=np.int64), np.ones(n_minor, dtype=np.int64)])
    return Dataset(
        features=X,
        labels=y,
        feature_names=tuple(f"x{j}" for j in range(d)),
        source_name=f"synthetic({n_major}/{n_minor},d={d},sep={separation})",
    )
