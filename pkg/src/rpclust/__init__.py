"""Clustering of uncertain data through representative possible worlds."""

from .divergence import DivergenceMatrix, KdeModel, fit_kde, jsd, kde_density, kl_estimate, pairwise_jsd
from .evaluation import ScoreReport, accuracy, baseline_independent_spectral, nmi, score
from .pipeline import RunConfig, RunReport, emit_report, load_report, run_pipeline
from .selection import representative_loss, select_representatives
from .spectral import (
    SpectralConfig,
    consistent_cluster,
    kmeans,
    normalized_laplacian,
    objective_value,
    similarity_matrix,
    spectral_clustering,
    top_k_eigenvectors,
    update_consensus,
    update_world_basis,
)
from .uncertain import (
    PossibleWorld,
    UncertainDataset,
    WorldEnsemble,
    gaussianize,
    load_dataset,
    points_dataset,
    sample_ensemble,
    sample_world,
)

__version__ = "0.1.0"
