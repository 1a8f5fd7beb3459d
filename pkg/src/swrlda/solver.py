"""Self-weighted robust LDA solver.

Maximizes the sum of unsquared projected class-mean distances, weighted by
pair frequencies, under the within-class whitening constraint.  The
alternating scheme fixes unit pair directions, assembles a linear trace
objective, and solves it in closed form through a thin SVD in the whitened
metric.  Each pair is implicitly re-weighted by the inverse of its current
projected distance, which is what keeps distant (edge) classes from
dominating the projection.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text
from .dataset import LabeledDataset
from .scatter import (
    ClassStatistics,
    EpsilonPolicy,
    ScatterPair,
    class_statistics,
    inverse_sqrt,
    within_scatter,
)

__all__ = [
    "SolverConfig",
    "Projection",
    "SolverTrace",
    "init_projection",
    "pair_directions",
    "assemble_m_naive",
    "assemble_m_fast",
    "solve_trace_subproblem",
    "objective",
    "fit",
    "project",
    "model_snapshot",
    "save_model",
    "load_model",
    "write_trace_csv",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the alternating solver.

    ``tolerance`` is the relative objective-change threshold; iteration
    stops once |f_t - f_{t-1}| / max(|f_{t-1}|, 1e-30) drops below it.
    ``zero_norm_threshold`` is the cutoff below which a projected pair
    distance is treated as exactly zero when normalizing directions.
    ``restarts`` runs the alternating loop from that many seeded random
    starts and keeps the best final objective: the criterion is not concave
    and a single start can stall on a sub-optimal stationary direction.
    """

    target_dim: int
    tolerance: float = 1e-6
    max_iterations: int = 100
    seed: int = 0
    epsilon_policy: EpsilonPolicy = field(default_factory=EpsilonPolicy)
    m_assembly: str = "fast"
    zero_norm_threshold: float = 1e-12
    restarts: int = 10

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.m_assembly not in ("fast", "naive"):
            raise ValueError(f"unknown m_assembly mode: {self.m_assembly!r}")
        if self.zero_norm_threshold < 0:
            raise ValueError("zero_norm_threshold must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "target_dim": self.target_dim,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "seed": self.seed,
            "epsilon_policy": {
                "kind": self.epsilon_policy.kind,
                "value": self.epsilon_policy.value,
            },
            "m_assembly": self.m_assembly,
            "zero_norm_threshold": self.zero_norm_threshold,
            "restarts": self.restarts,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SolverConfig":
        policy = payload.get("epsilon_policy", {})
        return cls(
            target_dim=payload["target_dim"],
            tolerance=payload.get("tolerance", 1e-6),
            max_iterations=payload.get("max_iterations", 100),
            seed=payload.get("seed", 0),
            epsilon_policy=EpsilonPolicy(
                kind=policy.get("kind", "relative"),
                value=policy.get("value", 1e-6),
            ),
            m_assembly=payload.get("m_assembly", "fast"),
            zero_norm_threshold=payload.get("zero_norm_threshold", 1e-12),
            restarts=payload.get("restarts", 10),
        )


@dataclass(frozen=True)
class Projection:
    """A learned d x m projection and the whitening residual it satisfies.

    ``constraint_residual`` is ||W^T (S_w + eps I) W - I||_F at the returned
    iterate, measured in the regularized metric the solver actually enforces.
    """

    matrix: np.ndarray
    constraint_residual: float
    source: str


@dataclass(frozen=True)
class SolverTrace:
    """Per-iteration objective values plus convergence metadata.

    ``weights_snapshot`` maps unordered class pairs (i, j), i < j, to the
    implicit self-weight 1/||W^T(m_i - m_j)|| at the final iterate; pairs
    whose projected distance collapsed below the zero threshold (infinite
    weight) are absent.
    """

    objectives: list[float]
    iterations: int
    converged: bool
    weights_snapshot: dict[tuple[int, int], float]


def init_projection(d: int, m: int, within_inv_sqrt: np.ndarray, seed) -> np.ndarray:
    """Feasible random start: whitened orthonormal factor of a seeded Gaussian.

    ``seed`` is anything ``numpy.random.default_rng`` accepts (an integer or
    a SeedSequence).
    """
    if m > d:
        raise ValueError(f"target dimension {m} exceeds feature count {d}")
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((d, m))
    q, _ = np.linalg.qr(gauss)
    return within_inv_sqrt @ q


def _projected_pair_diffs(projected_means: np.ndarray) -> np.ndarray:
    """All pairwise differences p_i - p_j as an (m, c, c) tensor."""
    return projected_means[:, :, None] - projected_means[:, None, :]


def _normalized_directions(projected_means: np.ndarray, tau: float):
    """Unit pair directions and distances; sub-tau pairs become zero vectors."""
    diffs = _projected_pair_diffs(projected_means)
    dist = np.linalg.norm(diffs, axis=0)
    safe = np.where(dist > tau, dist, 1.0)
    directions = np.where(dist > tau, diffs / safe, 0.0)
    return directions, dist


def pair_directions(
    W: np.ndarray, stats: ClassStatistics, tau: float = 1e-12
) -> dict[tuple[int, int], np.ndarray]:
    """Unit directions of projected class-mean differences, zero when degenerate.

    Returns all ordered pairs (i, j), i != j; by construction the map is
    antisymmetric.  Directions are computed from the projected means so that
    both M-assembly paths see bit-identical vectors.
    """
    projected = W.T @ stats.means
    directions, _ = _normalized_directions(projected, tau)
    c = stats.class_count
    out: dict[tuple[int, int], np.ndarray] = {}
    for i in range(c):
        for j in range(c):
            if i != j:
                out[(i, j)] = directions[:, i, j]
    return out


def assemble_m_naive(
    stats: ClassStatistics, directions: dict[tuple[int, int], np.ndarray]
) -> np.ndarray:
    """Literal double sum of weighted mean-difference/direction outer products."""
    n = float(stats.total)
    d = stats.feature_count
    m = next(iter(directions.values())).shape[0] if directions else 0
    M = np.zeros((d, m))
    for (i, j), s_ij in directions.items():
        weight = stats.counts[i] * stats.counts[j] / (2.0 * n**2)
        diff = stats.means[:, i] - stats.means[:, j]
        M += weight * np.outer(diff, s_ij)
    return M


def assemble_m_fast(
    stats: ClassStatistics, projected_means: np.ndarray, tau: float = 1e-12
) -> np.ndarray:
    """Aggregated assembly of the linearized objective matrix.

    Uses row/column direction sums s_i. = sum_j n_j s_ij and
    s_.j = sum_i n_i s_ij, so the cost is O(c^2 m + c d m) and no d x m
    outer product is ever formed per pair.
    """
    directions, _ = _normalized_directions(projected_means, tau)
    counts = stats.counts.astype(np.float64)
    n = float(stats.total)
    # s_row[:, i] = s_i. ; s_col[:, j] = s_.j
    s_row = np.einsum("mij,j->mi", directions, counts)
    s_col = np.einsum("mij,i->mj", directions, counts)
    weighted_means = stats.means * counts
    return weighted_means @ (s_row - s_col).T / (2.0 * n**2)


def solve_trace_subproblem(M: np.ndarray, scatter: ScatterPair) -> np.ndarray:
    """Closed-form maximizer of Tr(W^T M) under the whitening constraint.

    With S' the regularized inverse square root of the within scatter and
    A = S' M = U diag(sigma) V^T (thin SVD), the optimum is W = S' U V^T,
    which attains Tr(W^T M) = sum sigma_k.
    """
    d, m = M.shape
    if d < m:
        raise ValueError(f"M must be tall (d >= m), got shape {M.shape}")
    A = scatter.within_inv_sqrt @ M
    u, _, vt = np.linalg.svd(A, full_matrices=False)
    return scatter.within_inv_sqrt @ (u @ vt)


def objective(W: np.ndarray, stats: ClassStatistics) -> float:
    """Weighted sum of unsquared projected class-mean distances.

    Over ordered pairs i != j with weight n_i n_j / (2 n^2); computed over
    unordered pairs with doubled weight, which is the same sum.
    """
    projected = W.T @ stats.means
    c = stats.class_count
    if c < 2:
        return 0.0
    ii, jj = np.triu_indices(c, k=1)
    dist = np.linalg.norm(projected[:, ii] - projected[:, jj], axis=0)
    weights = stats.counts[ii] * stats.counts[jj] / float(stats.total) ** 2
    return float(np.sum(weights * dist))


def _constraint_residual(W: np.ndarray, scatter: ScatterPair) -> float:
    m = W.shape[1]
    gram = W.T @ (scatter.within + scatter.epsilon * np.eye(scatter.within.shape[0])) @ W
    return float(np.linalg.norm(gram - np.eye(m)))


def _weights_snapshot(
    projected_means: np.ndarray, tau: float
) -> dict[tuple[int, int], float]:
    c = projected_means.shape[1]
    out: dict[tuple[int, int], float] = {}
    for i in range(c):
        for j in range(i + 1, c):
            dist = float(np.linalg.norm(projected_means[:, i] - projected_means[:, j]))
            if dist > tau:
                out[(i, j)] = 1.0 / dist
    return out


def _run_alternating(stats, scatter, W, config):
    """One alternating pass from a given start; returns the final iterate."""
    tau = config.zero_norm_threshold
    objectives = [objective(W, stats)]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        if config.m_assembly == "fast":
            M = assemble_m_fast(stats, W.T @ stats.means, tau)
        else:
            M = assemble_m_naive(stats, pair_directions(W, stats, tau))
        W = solve_trace_subproblem(M, scatter)
        value = objective(W, stats)
        previous = objectives[-1]
        objectives.append(value)
        if abs(value - previous) / max(abs(previous), 1e-30) < config.tolerance:
            converged = True
            break
    return W, objectives, iterations, converged


def fit(data: LabeledDataset, config: SolverConfig) -> tuple[Projection, SolverTrace]:
    """Run the alternating solver to convergence.

    Statistics and the whitening factor are computed once; each iteration
    refreshes the pair directions at the current iterate, assembles the
    linearized objective matrix, and re-solves the trace subproblem in
    closed form.  The objective sequence is monotonically non-decreasing;
    non-convergence within ``max_iterations`` returns the last (best)
    iterate with ``converged=False`` rather than raising.

    The loop is repeated from ``config.restarts`` independent seeded starts
    (deterministic substreams of ``config.seed``) and the run with the best
    final objective wins; ties go to the earliest start.
    """
    d = data.feature_count
    m = config.target_dim
    if m > d:
        raise ValueError(f"target dimension {m} exceeds feature count {d}")
    stats = class_statistics(data)
    scatter = inverse_sqrt(within_scatter(data, stats), config.epsilon_policy)

    best = None
    for child in np.random.SeedSequence(config.seed).spawn(config.restarts):
        start = init_projection(d, m, scatter.within_inv_sqrt, child)
        run = _run_alternating(stats, scatter, start, config)
        if best is None or run[1][-1] > best[1][-1]:
            best = run
    W, objectives, iterations, converged = best

    projection = Projection(
        matrix=W,
        constraint_residual=_constraint_residual(W, scatter),
        source="swrlda",
    )
    trace = SolverTrace(
        objectives=objectives,
        iterations=iterations,
        converged=converged,
        weights_snapshot=_weights_snapshot(W.T @ stats.means, config.zero_norm_threshold),
    )
    return projection, trace


def project(data, W: np.ndarray) -> np.ndarray:
    """Project a dataset or raw d x n matrix into the learned subspace."""
    X = data.features if isinstance(data, LabeledDataset) else np.asarray(data)
    if X.shape[0] != W.shape[0]:
        raise ValueError(
            f"feature dimension mismatch: data has {X.shape[0]} rows, "
            f"projection expects {W.shape[0]}"
        )
    return W.T @ X


def model_snapshot(
    projection: Projection,
    epsilon: float,
    config: dict | None = None,
    objective_trace: list[float] | None = None,
) -> dict:
    """JSON-ready model snapshot with the projection stored row-major."""
    d, m = projection.matrix.shape
    return {
        "W": projection.matrix.tolist(),
        "d": d,
        "m": m,
        "source": projection.source,
        "epsilon": epsilon,
        "constraint_residual": projection.constraint_residual,
        "config": config or {},
        "objective_trace": list(objective_trace or []),
    }


def save_model(path, snapshot: dict) -> Path:
    return atomic_write_text(path, json.dumps(snapshot, indent=2) + "\n")


def load_model(path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    payload["W"] = np.asarray(payload["W"], dtype=np.float64)
    return payload


def write_trace_csv(path, objectives) -> Path:
    """Write the per-iteration objective sequence as (iteration, objective)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["iteration", "objective"])
    for t, value in enumerate(objectives):
        writer.writerow([t, repr(float(value))])
    return atomic_write_text(path, buf.getvalue())
