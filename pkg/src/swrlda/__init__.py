"""Self-weighted robust linear discriminant analysis.

A supervised dimensionality-reduction library built around an iteratively
re-weighted solver for the unsquared pairwise between-class criterion,
plus classical-LDA baselines, an evaluation harness, and dataset tooling.
"""

from .baselines import fit_flda_pairwise, fit_lda_eig
from .dataset import (
    DatasetError,
    GaussianSpec,
    LabeledDataset,
    corrupt_salt_pepper,
    load_csv,
    save_dataset,
    stratified_folds,
    syn1_spec,
    syn2_spec,
    synthesize,
    write_csv,
)
from .evaluation import (
    EvaluationReport,
    cross_validate,
    export_projection_plot,
    knn_classify,
    mean_min_pairwise_distance,
    min_pairwise_distance,
)
from .scatter import (
    ClassStatistics,
    EpsilonPolicy,
    ScatterPair,
    between_scatter_pairwise,
    between_scatter_total_mean,
    class_statistics,
    inverse_sqrt,
    within_scatter,
)
from .solver import (
    Projection,
    SolverConfig,
    SolverTrace,
    assemble_m_fast,
    assemble_m_naive,
    fit,
    init_projection,
    objective,
    pair_directions,
    project,
    solve_trace_subproblem,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "GaussianSpec",
    "LabeledDataset",
    "corrupt_salt_pepper",
    "load_csv",
    "save_dataset",
    "stratified_folds",
    "syn1_spec",
    "syn2_spec",
    "synthesize",
    "write_csv",
    "ClassStatistics",
    "EpsilonPolicy",
    "ScatterPair",
    "between_scatter_pairwise",
    "between_scatter_total_mean",
    "class_statistics",
    "inverse_sqrt",
    "within_scatter",
    "Projection",
    "SolverConfig",
    "SolverTrace",
    "assemble_m_fast",
    "assemble_m_naive",
    "fit",
    "init_projection",
    "objective",
    "pair_directions",
    "project",
    "solve_trace_subproblem",
    "fit_lda_eig",
    "fit_flda_pairwise",
    "EvaluationReport",
    "cross_validate",
    "export_projection_plot",
    "knn_classify",
    "mean_min_pairwise_distance",
    "min_pairwise_distance",
]
