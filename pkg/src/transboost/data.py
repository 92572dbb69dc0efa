"""Datasets: synthetic generators, CSV ingestion, transductive splits.

The split machinery produces the three pieces a transductive run needs:
a labeled training set, the unlabeled test features, and the test
labels, which are returned separately so training code never sees them.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with optional integer labels."""

    features: np.ndarray
    labels: np.ndarray | None
    n_classes: int
    name: str = ""

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64).copy()
        if x.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "features", x)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64).copy()
            if y.shape != (x.shape[0],):
                raise ValueError("labels must match the feature row count")
            if np.any(y < 0) or np.any(y >= self.n_classes):
                raise ValueError("labels must lie in [0, n_classes)")
            y.flags.writeable = False
            object.__setattr__(self, "labels", y)
        if self.n_classes < 1:
            raise ValueError("n_classes must be positive")

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, indices, name=None):
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            None if self.labels is None else self.labels[idx],
            self.n_classes,
            self.name if name is None else name,
        )

    def without_labels(self):
        return Dataset(self.features, None, self.n_classes, self.name)


@dataclass(frozen=True)
class SplitSpec:
    """Transductive split recipe.

    ``test_share`` fixes the base train/test partition; the two fractions
    then subsample each side (mirroring protocols that shrink the
    training set or the test set independently). Stratified by default so
    per-class proportions survive within one instance.
    """

    train_fraction: float = 1.0
    test_fraction: float = 1.0
    stratified: bool = True
    seed: int = 0
    test_share: float = 0.2

    def __post_init__(self):
        for fname in ("train_fraction", "test_fraction"):
            v = getattr(self, fname)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{fname} must lie in (0, 1], got {v}")
        if not (0.0 < self.test_share < 1.0):
            raise ValueError("test_share must lie in (0, 1)")


def gen_blobs(n_classes, per_class, n_features, center_scale=1.0, noise_sigma=1.0, seed=0):
    """Gaussian blobs: seeded class centers plus isotropic Gaussian noise."""
    if n_classes < 2 or per_class < 1 or n_features < 2:
        raise ValueError("need n_classes >= 2, per_class >= 1, n_features >= 2")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    centers = rng.normal(size=(n_classes, n_features)) * center_scale
    feats = np.empty((n_classes * per_class, n_features))
    labels = np.repeat(np.arange(n_classes), per_class)
    for k in range(n_classes):
        block = slice(k * per_class, (k + 1) * per_class)
        feats[block] = centers[k] + rng.normal(size=(per_class, n_features)) * noise_sigma
    return Dataset(feats, labels, n_classes, name=f"blobs-c{n_classes}-d{n_features}-s{seed}")


def gen_rings(n_classes, per_class, noise_sigma=0.05, seed=0):
    """Concentric 2-D rings, class k at radius k+1; not linearly separable."""
    if n_classes < 2 or per_class < 1:
        raise ValueError("need n_classes >= 2 and per_class >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    feats = np.empty((n_classes * per_class, 2))
    labels = np.repeat(np.arange(n_classes), per_class)
    for k in range(n_classes):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=per_class)
        radii = (k + 1.0) + rng.normal(size=per_class) * noise_sigma
        block = slice(k * per_class, (k + 1) * per_class)
        feats[block, 0] = radii * np.cos(angles)
        feats[block, 1] = radii * np.sin(angles)
    return Dataset(feats, labels, n_classes, name=f"rings-c{n_classes}-s{seed}")


def load_csv(path, n_classes=None):
    """Read a dataset from CSV.

    Layout: mandatory header; feature columns named f0..f{D-1}; optional
    ``label`` column that is either filled on every row (labeled dataset)
    or empty on every row (unlabeled). Row numbers in errors count the
    header as line 1. The class count is inferred as max label + 1 unless
    ``n_classes`` overrides it (unlabeled files default to 2).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        label_col = header.index("label") if "label" in header else None
        feat_cols = []
        for pos, name in enumerate(header):
            if pos == label_col:
                continue
            if not name.startswith("f") or not name[1:].isdigit():
                raise ValueError(f"{path}: unexpected column {name!r} (want f0..fN and optional label)")
            feat_cols.append((int(name[1:]), pos))
        feat_cols.sort()
        if [i for i, _ in feat_cols] != list(range(len(feat_cols))) or not feat_cols:
            raise ValueError(f"{path}: feature columns must be exactly f0..f{{D-1}}")
        positions = [pos for _, pos in feat_cols]

        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                rows.append([float(row[pos]) for pos in positions])
            except ValueError:
                raise ValueError(f"{path}: row {lineno}: non-numeric feature cell") from None
            if label_col is not None:
                cell = row[label_col].strip()
                if cell == "":
                    raw_labels.append(None)
                else:
                    try:
                        raw_labels.append(int(cell))
                    except ValueError:
                        raise ValueError(f"{path}: row {lineno}: non-integer label {cell!r}") from None

    if not rows:
        raise ValueError(f"{path}: no data rows")
    feats = np.asarray(rows, dtype=np.float64)

    labels = None
    if label_col is not None and any(v is not None for v in raw_labels):
        for offset, v in enumerate(raw_labels):
            if v is None:
                raise ValueError(f"{path}: row {offset + 2}: empty label in a labeled file")
        labels = np.asarray(raw_labels, dtype=np.int64)
    inferred = int(labels.max()) + 1 if labels is not None else 2
    return Dataset(feats, labels, n_classes if n_classes is not None else inferred, name=str(path))


def _count(fraction, n):
    """Round half up; fractions map to deterministic subsample sizes."""
    return int(math.floor(fraction * n + 0.5))


def split_indices(dataset, spec):
    """Index-level split: (train indices, test indices, held-out test indices).

    The held-out indices are base-test instances dropped by
    ``test_fraction`` subsampling; they never enter a run and are kept for
    measuring how a fine-tuned model generalizes beyond its test set.
    """
    if dataset.labels is None:
        raise ValueError("transductive split needs a labeled dataset")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))

    def subsample(pool, fraction, what):
        m = _count(fraction, len(pool))
        if m < 1:
            raise ValueError(f"{what} fraction {fraction} leaves no examples")
        return pool[:m], pool[m:]

    train_parts, test_parts, holdout_parts = [], [], []
    if spec.stratified:
        for k in range(dataset.n_classes):
            members = np.flatnonzero(dataset.labels == k)
            if len(members) < 2:
                raise ValueError(f"class {k} has fewer than 2 examples; cannot partition")
            members = members[rng.permutation(len(members))]
            n_test = min(max(_count(spec.test_share, len(members)), 1), len(members) - 1)
            test_pool, train_pool = members[:n_test], members[n_test:]
            taken, _ = subsample(train_pool, spec.train_fraction, f"class {k} train")
            train_parts.append(taken)
            taken, rest = subsample(test_pool, spec.test_fraction, f"class {k} test")
            test_parts.append(taken)
            holdout_parts.append(rest)
    else:
        order = rng.permutation(len(dataset))
        n_test = min(max(_count(spec.test_share, len(order)), 1), len(order) - 1)
        test_pool, train_pool = order[:n_test], order[n_test:]
        taken, _ = subsample(train_pool, spec.train_fraction, "train")
        train_parts.append(taken)
        taken, rest = subsample(test_pool, spec.test_fraction, "test")
        test_parts.append(taken)
        holdout_parts.append(rest)

    def cat(parts):
        return np.sort(np.concatenate(parts)).astype(np.int64)

    return cat(train_parts), cat(test_parts), cat(holdout_parts)


def transductive_split(dataset, spec):
    """Split into (labeled train set, unlabeled test set, hidden test labels).

    The returned test dataset carries no labels; the true labels come back
    as a separate array meant only for evaluation code.
    """
    train_idx, test_idx, _ = split_indices(dataset, spec)
    train = dataset.subset(train_idx, name=f"{dataset.name}/train")
    test = dataset.subset(test_idx, name=f"{dataset.name}/test").without_labels()
    hidden = dataset.labels[test_idx].copy()
    return train, test, hidden
