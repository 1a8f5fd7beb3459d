"""Evaluation protocol: nearest-neighbor accuracy under cross validation,
minimum pairwise projected class distance, and plot-data extraction."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text
from .baselines import fit_flda_pairwise, fit_lda_eig
from .dataset import LabeledDataset, stratified_folds
from .scatter import ClassStatistics, EpsilonPolicy, class_statistics
from .solver import Projection, SolverConfig, fit

__all__ = [
    "EvaluationReport",
    "METHODS",
    "fit_method",
    "knn_classify",
    "evaluate_fold",
    "cross_validate",
    "min_pairwise_distance",
    "mean_min_pairwise_distance",
    "export_projection_plot",
]

METHODS = ("swrlda", "lda_eig", "flda")


@dataclass(frozen=True)
class EvaluationReport:
    """Cross-validated accuracy statistics for one (method, dimension) cell."""

    method: str
    projected_dim: int
    per_fold_accuracy: list[float]
    mean_accuracy: float
    std_accuracy: float
    min_pairwise_distance: float
    wall_time_s: float | None

    def as_dict(self, include_timing: bool = True) -> dict:
        return {
            "method": self.method,
            "m": self.projected_dim,
            "folds": list(self.per_fold_accuracy),
            "mean": self.mean_accuracy,
            "std": self.std_accuracy,
            "min_pairwise_distance": self.min_pairwise_distance,
            "wall_time_s": self.wall_time_s if include_timing else None,
        }


def fit_method(
    data: LabeledDataset,
    method: str,
    m: int,
    solver_config: SolverConfig | None = None,
    epsilon_policy: EpsilonPolicy | None = None,
    seed: int = 0,
) -> Projection:
    """Dispatch to the requested fitter with a shared epsilon policy."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    policy = epsilon_policy or EpsilonPolicy()
    if method == "swrlda":
        if solver_config is None:
            config = SolverConfig(target_dim=m, seed=seed, epsilon_policy=policy)
        else:
            config = replace(solver_config, target_dim=m)
        projection, _ = fit(data, config)
        return projection
    if method == "lda_eig":
        return fit_lda_eig(data, m, policy)
    return fit_flda_pairwise(data, m, policy)


def knn_classify(
    train_points: np.ndarray,
    train_labels: np.ndarray,
    query_points: np.ndarray,
    k: int = 1,
) -> np.ndarray:
    """k-nearest-neighbor labels under Euclidean distance.

    Distance ties are broken by the lower training index; vote ties by the
    label of the nearest member among the tied labels.  Distances are
    computed by direct differencing so exact ties stay exact.
    """
    train_points = np.atleast_2d(np.asarray(train_points, dtype=np.float64))
    query_points = np.atleast_2d(np.asarray(query_points, dtype=np.float64))
    train_labels = np.asarray(train_labels, dtype=np.int64)
    n_train = train_points.shape[1]
    if n_train == 0:
        raise ValueError("training set is empty")
    if not 1 <= k <= n_train:
        raise ValueError(f"k={k} outside [1, {n_train}]")

    predictions = np.empty(query_points.shape[1], dtype=np.int64)
    for qi in range(query_points.shape[1]):
        diff = train_points - query_points[:, qi][:, None]
        dist_sq = np.einsum("ij,ij->j", diff, diff)
        order = np.argsort(dist_sq, kind="stable")[:k]
        neighbor_labels = train_labels[order]
        if k == 1:
            predictions[qi] = neighbor_labels[0]
            continue
        counts = np.bincount(neighbor_labels)
        winners = np.flatnonzero(counts == counts.max())
        if winners.size == 1:
            predictions[qi] = winners[0]
        else:
            tied = set(winners.tolist())
            predictions[qi] = next(
                label for label in neighbor_labels if label in tied
            )
    return predictions


def _dense_training_dataset(features: np.ndarray, labels: np.ndarray) -> LabeledDataset:
    # Fitting only needs the class partition; compacted codes keep the
    # dataset invariant satisfied when a class is absent from a fold.
    _, dense = np.unique(labels, return_inverse=True)
    return LabeledDataset(
        features=features, labels=dense, class_count=int(dense.max()) + 1
    )


def evaluate_fold(
    data: LabeledDataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    method: str,
    m: int,
    solver_config: SolverConfig | None = None,
    epsilon_policy: EpsilonPolicy | None = None,
    seed: int = 0,
    k_neighbors: int = 1,
) -> tuple[float, float]:
    """Fit on the train rows only, classify the test rows, return (accuracy, fit seconds)."""
    train_features = data.features[:, train_idx]
    train_labels = data.labels[train_idx]
    fit_data = _dense_training_dataset(train_features, train_labels)
    start = time.perf_counter()
    projection = fit_method(fit_data, method, m, solver_config, epsilon_policy, seed)
    elapsed = time.perf_counter() - start
    W = projection.matrix
    predicted = knn_classify(
        W.T @ train_features,
        train_labels,
        W.T @ data.features[:, test_idx],
        k=k_neighbors,
    )
    accuracy = float(np.mean(predicted == data.labels[test_idx]))
    return accuracy, elapsed


def cross_validate(
    data: LabeledDataset,
    method: str,
    m: int,
    k_folds: int = 5,
    seed: int = 0,
    solver_config: SolverConfig | None = None,
    epsilon_policy: EpsilonPolicy | None = None,
) -> EvaluationReport:
    """Stratified k-fold 1-NN accuracy plus the full-data separation margin.

    Per fold the model is fit on the training rows alone; the reported
    ``min_pairwise_distance`` comes from a single fit on the full dataset.
    Standard deviation over folds is the population form (divide by k).
    """
    folds = stratified_folds(data, k_folds, seed)
    accuracies = []
    fit_times = []
    for train_idx, test_idx in folds:
        accuracy, elapsed = evaluate_fold(
            data, train_idx, test_idx, method, m, solver_config, epsilon_policy, seed
        )
        accuracies.append(accuracy)
        fit_times.append(elapsed)

    start = time.perf_counter()
    projection = fit_method(data, method, m, solver_config, epsilon_policy, seed)
    fit_times.append(time.perf_counter() - start)
    stats = class_statistics(data)
    accuracies_arr = np.asarray(accuracies)
    return EvaluationReport(
        method=method,
        projected_dim=m,
        per_fold_accuracy=[float(a) for a in accuracies],
        mean_accuracy=float(accuracies_arr.mean()),
        std_accuracy=float(accuracies_arr.std()),
        min_pairwise_distance=min_pairwise_distance(projection.matrix, stats),
        wall_time_s=float(np.mean(fit_times)),
    )


def min_pairwise_distance(W: np.ndarray, stats: ClassStatistics) -> float:
    """Smallest projected distance between any two class means."""
    c = stats.class_count
    if c < 2:
        raise ValueError("need at least two classes")
    projected = W.T @ stats.means
    ii, jj = np.triu_indices(c, k=1)
    dist = np.linalg.norm(projected[:, ii] - projected[:, jj], axis=0)
    return float(dist.min())


def mean_min_pairwise_distance(
    data: LabeledDataset,
    method: str,
    m: int,
    runs: int = 100,
    base_seed: int = 0,
    solver_config: SolverConfig | None = None,
    epsilon_policy: EpsilonPolicy | None = None,
) -> float:
    """Minimum pairwise distance averaged over seeded fit repetitions.

    The eigendecomposition baselines are seed-independent, so a single fit
    stands in for the whole average there.
    """
    stats = class_statistics(data)
    if method != "swrlda":
        projection = fit_method(data, method, m, solver_config, epsilon_policy)
        return min_pairwise_distance(projection.matrix, stats)
    values = []
    for run in range(runs):
        seed = base_seed + run
        if solver_config is None:
            config = SolverConfig(
                target_dim=m, seed=seed, epsilon_policy=epsilon_policy or EpsilonPolicy()
            )
        else:
            config = replace(solver_config, target_dim=m, seed=seed)
        projection, _ = fit(data, config)
        values.append(min_pairwise_distance(projection.matrix, stats))
    return float(np.mean(values))


def export_projection_plot(
    data: LabeledDataset, W: np.ndarray, out_prefix, bins: int = 50
) -> dict[str, Path]:
    """Write projected coordinates (and, in 1-D, per-class histograms) as CSV.

    ``out_prefix`` is a path prefix; files are written as
    ``<prefix>_points.csv`` and, for one-dimensional projections,
    ``<prefix>_hist.csv`` with rows (bin_left, bin_right, label, count) for
    the non-empty bins of each class.
    """
    m = W.shape[1]
    if m > 2:
        raise ValueError(f"plot export supports 1- or 2-D projections, got m={m}")
    out_prefix = Path(out_prefix)
    coords = W.T @ data.features

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["x", "label"] if m == 1 else ["x", "y", "label"])
    for i in range(data.sample_count):
        row = [repr(float(v)) for v in coords[:, i]]
        row.append(str(int(data.labels[i])))
        writer.writerow(row)
    points_path = atomic_write_text(
        out_prefix.parent / (out_prefix.name + "_points.csv"), buf.getvalue()
    )
    written = {"points": points_path}

    if m == 1:
        values = coords[0]
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["bin_left", "bin_right", "label", "count"])
        for cls in range(data.class_count):
            counts, _ = np.histogram(values[data.labels == cls], bins=edges)
            for b in np.flatnonzero(counts):
                writer.writerow(
                    [repr(float(edges[b])), repr(float(edges[b + 1])), cls, int(counts[b])]
                )
        written["histogram"] = atomic_write_text(
            out_prefix.parent / (out_prefix.name + "_hist.csv"), buf.getvalue()
        )
    return written
