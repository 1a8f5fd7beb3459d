"""Classical LDA baselines solved by eigendecomposition.

Both variants maximize the squared between-class criterion under the
within-class whitening constraint; they differ only in how the between
scatter is assembled (total-mean offsets vs pairwise mean differences),
and by construction span the same subspace.
"""

from __future__ import annotations

import warnings

import numpy as np

from .dataset import LabeledDataset
from .scatter import (
    EpsilonPolicy,
    between_scatter_pairwise,
    between_scatter_total_mean,
    class_statistics,
    inverse_sqrt,
    within_scatter,
)
from .solver import Projection

__all__ = ["fit_lda_eig", "fit_flda_pairwise"]


def _fix_column_signs(W: np.ndarray) -> np.ndarray:
    # Reproducible orientation: largest-magnitude entry of each column positive.
    W = W.copy()
    for k in range(W.shape[1]):
        lead = np.argmax(np.abs(W[:, k]))
        if W[lead, k] < 0:
            W[:, k] = -W[:, k]
    return W


def _fit_generalized_eig(
    data: LabeledDataset,
    m: int,
    epsilon_policy: EpsilonPolicy,
    between_fn,
    source: str,
) -> Projection:
    d = data.feature_count
    if m < 1:
        raise ValueError("target dimension must be >= 1")
    if m > d:
        raise ValueError(f"target dimension {m} exceeds feature count {d}")
    stats = class_statistics(data)
    scatter = inverse_sqrt(within_scatter(data, stats), epsilon_policy)
    between = between_fn(stats)
    if m > stats.class_count - 1:
        warnings.warn(
            f"target dimension {m} exceeds the between-class rank bound "
            f"{stats.class_count - 1}; trailing directions are near-null",
            stacklevel=3,
        )

    # Symmetric pencil: eigenvectors of S' S_b S', back-transformed by S'.
    pencil = scatter.within_inv_sqrt @ between @ scatter.within_inv_sqrt
    pencil = (pencil + pencil.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(pencil)
    order = np.argsort(-eigvals, kind="stable")
    top = eigvecs[:, order[:m]]
    W = _fix_column_signs(scatter.within_inv_sqrt @ top)

    eye = np.eye(m)
    gram = W.T @ (scatter.within + scatter.epsilon * np.eye(d)) @ W
    return Projection(
        matrix=W,
        constraint_residual=float(np.linalg.norm(gram - eye)),
        source=source,
    )


def fit_lda_eig(
    data: LabeledDataset, m: int, epsilon_policy: EpsilonPolicy = EpsilonPolicy()
) -> Projection:
    """Classical LDA: top-m directions of the whitened total-mean between scatter."""
    return _fit_generalized_eig(
        data, m, epsilon_policy, between_scatter_total_mean, "lda_eig"
    )


def fit_flda_pairwise(
    data: LabeledDataset, m: int, epsilon_policy: EpsilonPolicy = EpsilonPolicy()
) -> Projection:
    """Pairwise-form LDA: identical contract, between scatter built pair by pair."""
    return _fit_generalized_eig(
        data, m, epsilon_policy, between_scatter_pairwise, "flda"
    )
