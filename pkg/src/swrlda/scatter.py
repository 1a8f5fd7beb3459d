"""Class statistics and scatter matrices.

Within-class scatter, the two equivalent between-class forms (total-mean
and pairwise), and the regularized inverse square root that whitens the
within-class metric for the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

__all__ = [
    "EpsilonPolicy",
    "ClassStatistics",
    "ScatterPair",
    "class_statistics",
    "within_scatter",
    "between_scatter_total_mean",
    "between_scatter_pairwise",
    "inverse_sqrt",
]

_SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class EpsilonPolicy:
    """Ridge size used to regularize the within-class scatter before inversion.

    ``relative`` scales ``value`` by trace(S)/d, floored at 1e-12, so the
    ridge tracks the data scale; ``absolute`` uses ``value`` verbatim.
    """

    kind: str = "relative"
    value: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("relative", "absolute"):
            raise ValueError(f"unknown epsilon policy kind: {self.kind!r}")
        if self.value < 0:
            raise ValueError("epsilon value must be non-negative")

    def epsilon_for(self, matrix: np.ndarray) -> float:
        if self.kind == "absolute":
            return float(self.value)
        d = matrix.shape[0]
        return float(max(self.value * float(np.trace(matrix)) / d, 1e-12))


@dataclass(frozen=True)
class ClassStatistics:
    """Per-class means (d x c, one column per class), counts, and totals."""

    means: np.ndarray
    counts: np.ndarray
    total: int
    total_mean: np.ndarray

    @property
    def class_count(self) -> int:
        return self.means.shape[1]

    @property
    def feature_count(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class ScatterPair:
    """Within-class scatter S and its regularized inverse square root.

    ``within_inv_sqrt`` is (S + epsilon*I)^(-1/2); ``dropped_rank`` counts
    eigenvalues of S that fell below epsilon before the shift.
    """

    within: np.ndarray
    within_inv_sqrt: np.ndarray
    epsilon: float
    dropped_rank: int

    def as_dict(self) -> dict:
        return {
            "within": self.within.tolist(),
            "within_inv_sqrt": self.within_inv_sqrt.tolist(),
            "epsilon": self.epsilon,
            "dropped_rank": self.dropped_rank,
        }


def class_statistics(data: LabeledDataset) -> ClassStatistics:
    """Arithmetic per-class means, class counts, and the total mean."""
    d, n = data.features.shape
    c = data.class_count
    means = np.empty((d, c), dtype=np.float64)
    counts = np.empty(c, dtype=np.int64)
    for cls in range(c):
        members = data.labels == cls
        counts[cls] = int(members.sum())
        means[:, cls] = data.features[:, members].mean(axis=1)
    return ClassStatistics(
        means=means,
        counts=counts,
        total=n,
        total_mean=data.features.mean(axis=1),
    )


def within_scatter(data: LabeledDataset, stats: ClassStatistics) -> np.ndarray:
    """Unnormalized within-class scatter: sum of centered outer products."""
    centered = data.features - stats.means[:, data.labels]
    return centered @ centered.T


def between_scatter_total_mean(stats: ClassStatistics) -> np.ndarray:
    """Between-class scatter from class-mean offsets to the total mean."""
    weights = stats.counts / stats.total
    offsets = stats.means - stats.total_mean[:, None]
    return (offsets * weights) @ offsets.T


def between_scatter_pairwise(stats: ClassStatistics) -> np.ndarray:
    """Between-class scatter assembled from pairwise class-mean differences.

    Sums (n_i n_j / n^2) (m_i - m_j)(m_i - m_j)^T over unordered pairs,
    which agrees with the total-mean form without ever touching the total
    mean.  Kept as a genuinely pairwise computation so the two routes stay
    independent checks of each other.
    """
    c = stats.class_count
    n = stats.total
    if c < 2:
        return np.zeros((stats.feature_count, stats.feature_count))
    ii, jj = np.triu_indices(c, k=1)
    diffs = stats.means[:, ii] - stats.means[:, jj]
    weights = stats.counts[ii] * stats.counts[jj] / float(n) ** 2
    return (diffs * weights) @ diffs.T


def inverse_sqrt(
    within: np.ndarray, epsilon_policy: EpsilonPolicy = EpsilonPolicy()
) -> ScatterPair:
    """Regularized inverse square root via symmetric eigendecomposition.

    Eigenvalues of (within + epsilon*I) are mapped to lambda^(-1/2); epsilon
    comes from the policy.  Raises for inputs that are not symmetric to
    working tolerance or whose shifted spectrum is not strictly positive.
    """
    within = np.asarray(within, dtype=np.float64)
    if within.ndim != 2 or within.shape[0] != within.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {within.shape}")
    scale = max(float(np.linalg.norm(within)), 1e-300)
    if float(np.linalg.norm(within - within.T)) > _SYMMETRY_RTOL * scale:
        raise ValueError("within-class scatter is not symmetric to tolerance")
    sym = (within + within.T) / 2.0
    epsilon = epsilon_policy.epsilon_for(sym)
    eigvals, eigvecs = np.linalg.eigh(sym)
    dropped_rank = int(np.count_nonzero(eigvals < epsilon))
    shifted = eigvals + epsilon
    if np.any(shifted <= 0):
        raise np.linalg.LinAlgError(
            "within-class scatter has non-positive eigenvalues after the "
            f"epsilon shift (epsilon={epsilon:g}); increase the ridge"
        )
    inv_sqrt = (eigvecs * shifted**-0.5) @ eigvecs.T
    return ScatterPair(
        within=sym,
        within_inv_sqrt=inv_sqrt,
        epsilon=epsilon,
        dropped_rank=dropped_rank,
    )
