"""Dataset construction.

CSV ingestion, seeded synthetic Gaussian generators, stratified fold
splitting, and the salt-and-pepper corruption used in robustness studies.
Feature matrices follow the d x n column-per-sample convention throughout
the package; CSV files on disk are row-per-sample and transposed on load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text

__all__ = [
    "DatasetError",
    "EmptyFileError",
    "RaggedRowError",
    "NonNumericFeatureError",
    "SingleClassError",
    "CovarianceNotPositiveDefiniteError",
    "LabeledDataset",
    "GaussianSpec",
    "load_csv",
    "write_csv",
    "save_dataset",
    "synthesize",
    "syn1_spec",
    "syn2_spec",
    "corrupt_salt_pepper",
    "stratified_folds",
]


class DatasetError(ValueError):
    """Base class for dataset construction failures."""


class EmptyFileError(DatasetError):
    pass


class RaggedRowError(DatasetError):
    pass


class NonNumericFeatureError(DatasetError):
    pass


class SingleClassError(DatasetError):
    pass


class CovarianceNotPositiveDefiniteError(DatasetError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """A d x n feature matrix (one column per sample) with dense integer labels.

    Labels take values 0..class_count-1 and every class is non-empty.
    Instances are immutable: the arrays are copied on construction and
    marked read-only, so datasets are safe to share across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    label_map: dict[str, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        d, n = features.shape
        if d < 1:
            raise DatasetError("need at least one feature dimension")
        if labels.shape != (n,):
            raise DatasetError(
                f"label vector has length {labels.shape}, expected ({n},)"
            )
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite entries")
        c = int(self.class_count)
        if c < 2:
            raise SingleClassError("dataset must contain at least two classes")
        if n < c:
            raise DatasetError(f"{n} samples cannot cover {c} classes")
        if labels.min() < 0 or labels.max() >= c:
            raise DatasetError(f"labels must lie in [0, {c})")
        sizes = np.bincount(labels, minlength=c)
        if (sizes == 0).any():
            missing = int(np.flatnonzero(sizes == 0)[0])
            raise DatasetError(f"class {missing} has no samples")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_count", c)

    @property
    def feature_count(self) -> int:
        return self.features.shape[0]

    @property
    def sample_count(self) -> int:
        return self.features.shape[1]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class GaussianSpec:
    """Parameters for a c-class Gaussian mixture with a shared covariance.

    ``means`` is a (c, d) array of class means; ``covariance`` is a d x d
    symmetric positive-definite matrix used by every class.
    """

    means: np.ndarray
    covariance: np.ndarray
    samples_per_class: int
    seed: int = 0

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64, copy=True)
        cov = np.array(self.covariance, dtype=np.float64, copy=True)
        if means.ndim != 2:
            raise DatasetError("means must be a list of equal-length vectors")
        d = means.shape[1]
        if cov.shape != (d, d):
            raise DatasetError(f"covariance must be {d}x{d}, got {cov.shape}")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise DatasetError("covariance matrix is not symmetric")
        if int(self.samples_per_class) < 1:
            raise DatasetError("samples_per_class must be >= 1")
        means.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "samples_per_class", int(self.samples_per_class))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def class_count(self) -> int:
        return self.means.shape[0]

    @property
    def feature_count(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "samples_per_class": self.samples_per_class,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianSpec":
        try:
            means = np.asarray(payload["means"], dtype=np.float64)
        except KeyError:
            raise DatasetError("spec is missing 'means'") from None
        cov = payload.get("covariance")
        if cov is None:
            cov = np.eye(means.shape[1] if means.ndim == 2 else 0)
        return cls(
            means=means,
            covariance=np.asarray(cov, dtype=np.float64),
            samples_per_class=payload.get("samples_per_class", 200),
            seed=payload.get("seed", 0),
        )


# 2-D benchmark geometries: three closely spaced classes on a line, and the
# same three plus a fourth class far off to the side (an "edge" class that
# dominates squared-distance criteria).
_SYN1_MEANS = ((-5.0, -4.0), (-3.0, 1.0), (-1.0, 6.0))
_SYN2_MEANS = _SYN1_MEANS + ((10.0, -2.0),)


def syn1_spec(seed: int = 0, samples_per_class: int = 200) -> GaussianSpec:
    """Three nearby unit-covariance classes in the plane."""
    return GaussianSpec(
        means=np.array(_SYN1_MEANS),
        covariance=np.eye(2),
        samples_per_class=samples_per_class,
        seed=seed,
    )


def syn2_spec(seed: int = 0, samples_per_class: int = 200) -> GaussianSpec:
    """The syn1 geometry plus a distant fourth (edge) class."""
    return GaussianSpec(
        means=np.array(_SYN2_MEANS),
        covariance=np.eye(2),
        samples_per_class=samples_per_class,
        seed=seed,
    )


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: str | int = "label") -> LabeledDataset:
    """Load a row-per-sample CSV into the column-per-sample layout.

    ``label_column`` selects the label field by header name or 0-based
    index.  A header row is required when selecting by name; with an index
    it is auto-detected by a non-numeric feature cell in the first row.
    Label tokens (integer or categorical) are densified to 0-based codes in
    first-occurrence order; the original-token mapping is kept on the
    returned dataset's ``label_map``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyFileError(f"{path}: file contains no rows")

    arity = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != arity:
            raise RaggedRowError(
                f"{path}: row {r + 1} has {len(row)} cells, expected {arity}"
            )

    if isinstance(label_column, str):
        header = [cell.strip() for cell in rows[0]]
        if label_column not in header:
            raise DatasetError(
                f"{path}: label column {label_column!r} not found in header {header}"
            )
        label_idx = header.index(label_column)
        data_rows = rows[1:]
        first_data_row = 2
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < arity:
            raise DatasetError(
                f"{path}: label column index {label_idx} out of range for {arity} columns"
            )
        feature_cells = [c for j, c in enumerate(rows[0]) if j != label_idx]
        has_header = any(not _is_float(c) for c in feature_cells)
        data_rows = rows[1:] if has_header else rows
        first_data_row = 2 if has_header else 1

    if not data_rows:
        raise EmptyFileError(f"{path}: no data rows")

    n = len(data_rows)
    d = arity - 1
    if d < 1:
        raise DatasetError(f"{path}: no feature columns")

    features = np.empty((d, n), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    label_map: dict[str, int] = {}
    for i, row in enumerate(data_rows):
        col = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                token = cell.strip()
                if token not in label_map:
                    label_map[token] = len(label_map)
                labels[i] = label_map[token]
            else:
                try:
                    features[col, i] = float(cell)
                except ValueError:
                    raise NonNumericFeatureError(
                        f"{path}: row {first_data_row + i}, column {j + 1}: "
                        f"{cell!r} is not numeric"
                    ) from None
                col += 1

    if len(label_map) < 2:
        raise SingleClassError(f"{path}: file contains a single class")
    return LabeledDataset(
        features=features,
        labels=labels,
        class_count=len(label_map),
        label_map=label_map,
    )


def write_csv(data: LabeledDataset, path) -> Path:
    """Write a dataset as row-per-sample CSV with a ``label`` column.

    Floats are written with shortest round-trip repr, so
    ``load_csv(write_csv(ds))`` reproduces ``ds`` exactly.
    """
    path = Path(path)
    header = [f"f{j}" for j in range(data.feature_count)] + ["label"]
    lines = [",".join(header)]
    for i in range(data.sample_count):
        cells = [repr(float(v)) for v in data.features[:, i]]
        cells.append(str(int(data.labels[i])))
        lines.append(",".join(cells))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def save_dataset(
    data: LabeledDataset,
    csv_path,
    seed: int | None = None,
    provenance: str = "",
) -> tuple[Path, Path]:
    """Persist a dataset snapshot: CSV plus a JSON sidecar of metadata."""
    csv_path = Path(csv_path)
    write_csv(data, csv_path)
    label_map = data.label_map or {str(i): i for i in range(data.class_count)}
    sidecar = csv_path.with_suffix(".json")
    atomic_write_text(
        sidecar,
        json.dumps(
            {
                "d": data.feature_count,
                "n": data.sample_count,
                "c": data.class_count,
                "label_map": label_map,
                "seed": seed,
                "provenance": provenance,
            },
            indent=2,
        )
        + "\n",
    )
    return csv_path, sidecar


def synthesize(spec: GaussianSpec) -> LabeledDataset:
    """Draw ``samples_per_class`` points per class from N(mean_i, covariance).

    Sampling goes through the Cholesky factor of the covariance applied to
    seeded standard normals, so identical (spec, seed) pairs reproduce
    bit-identical datasets.
    """
    try:
        chol = np.linalg.cholesky(spec.covariance)
    except np.linalg.LinAlgError:
        raise CovarianceNotPositiveDefiniteError(
            "covariance matrix is not positive definite (Cholesky factorization failed)"
        ) from None
    rng = np.random.default_rng(spec.seed)
    d = spec.feature_count
    k = spec.samples_per_class
    blocks = []
    for mean in spec.means:
        z = rng.standard_normal((d, k))
        blocks.append(mean[:, None] + chol @ z)
    features = np.hstack(blocks)
    labels = np.repeat(np.arange(spec.class_count, dtype=np.int64), k)
    return LabeledDataset(features=features, labels=labels, class_count=spec.class_count)


def corrupt_salt_pepper(
    data: LabeledDataset,
    target_classes,
    sample_fraction: float,
    pixel_fraction: float,
    seed: int = 0,
) -> LabeledDataset:
    """Set random feature entries of random samples to the global extremes.

    Within each target class, floor(sample_fraction * n_i) samples are drawn
    without replacement; in each, floor(pixel_fraction * d) feature indices
    are drawn without replacement and set to the dataset-wide feature minimum
    or maximum with probability 1/2 each.  Labels and all non-selected
    entries are untouched.
    """
    if not 0.0 <= sample_fraction <= 1.0:
        raise DatasetError(f"sample_fraction {sample_fraction} outside [0, 1]")
    if not 0.0 <= pixel_fraction <= 1.0:
        raise DatasetError(f"pixel_fraction {pixel_fraction} outside [0, 1]")
    targets = sorted(int(t) for t in target_classes)
    for t in targets:
        if not 0 <= t < data.class_count:
            raise DatasetError(f"target class {t} out of range [0, {data.class_count})")

    features = np.array(data.features, copy=True)
    lo = float(features.min())
    hi = float(features.max())
    d = data.feature_count
    n_pixels = int(pixel_fraction * d)
    rng = np.random.default_rng(seed)
    for cls in targets:
        members = np.flatnonzero(data.labels == cls)
        n_samples = int(sample_fraction * members.size)
        if n_samples == 0 or n_pixels == 0:
            continue
        chosen = rng.choice(members, size=n_samples, replace=False)
        for col in chosen:
            pix = rng.choice(d, size=n_pixels, replace=False)
            extremes = rng.integers(0, 2, size=n_pixels)
            features[pix, col] = np.where(extremes == 0, lo, hi)
    return LabeledDataset(
        features=features,
        labels=data.labels,
        class_count=data.class_count,
        label_map=data.label_map,
    )


def stratified_folds(data: LabeledDataset, k: int, seed: int = 0):
    """Split sample indices into k stratified (train, test) pairs.

    Test folds partition 0..n-1; within every class the fold sizes differ by
    at most one.  Requires every class to hold at least k samples.
    """
    k = int(k)
    if k < 1:
        raise DatasetError("fold count must be positive")
    sizes = data.class_sizes()
    small = np.flatnonzero(sizes < k)
    if small.size:
        cls = int(small[0])
        raise DatasetError(
            f"class {cls} has {int(sizes[cls])} samples, fewer than {k} folds"
        )
    rng = np.random.default_rng(seed)
    test_parts: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls in range(data.class_count):
        members = np.flatnonzero(data.labels == cls)
        perm = rng.permutation(members)
        for f, chunk in enumerate(np.array_split(perm, k)):
            test_parts[f].append(chunk)
    all_idx = np.arange(data.sample_count)
    folds = []
    for parts in test_parts:
        test = np.sort(np.concatenate(parts))
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        folds.append((train, test))
    return folds
