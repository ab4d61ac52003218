"""pairlik: pairwise-likelihood estimation of spatial error models.

A KD-tree pairs each point with a nearest unpaired neighbor inside a
radius; the coupled observations feed closed-form pairwise-likelihood
estimators of (beta, sigma2, psi).  A full maximum-likelihood spatial
error model serves as the accuracy and runtime baseline, and a seeded
Monte Carlo harness reproduces accuracy tables and timing comparisons.
"""

from .coupling import (Couplet, CoupletSet, PairingReport, RadiusSpec,
                       filter_separated, pair_points, pairing_report,
                       resolve_radius)
from .datagen import (Dataset, DgpConfig, cholesky_lower, correlation_matrix,
                      gen_locations, simulate_dataset)
from .errors import PairlikError
from .estimator import (PairedSample, PlFit, PlParams, SufficientStats,
                        extract_paired_sample, numerical_pl_mle,
                        pairwise_loglik, solve_pl, sufficient_statistics)
from .experiments import (McConfig, McReport, Metrics, TimingReport,
                          buffer_sweep, compute_metrics, run_montecarlo,
                          run_replication, timing_benchmark)
from .sem import (SemFit, WeightsMatrix, build_knn_weights, fit_sem_ml,
                  sem_loglik, simulate_sem_errors)
from .spatial import (DistanceSummary, KdTree, NeighborList, Point, PointSet,
                      build_tree, distance_summary, nearest_neighbors)

__version__ = "0.1.0"

__all__ = [
    "Couplet", "CoupletSet", "PairingReport", "RadiusSpec",
    "filter_separated", "pair_points", "pairing_report", "resolve_radius",
    "Dataset", "DgpConfig", "cholesky_lower", "correlation_matrix",
    "gen_locations", "simulate_dataset",
    "PairlikError",
    "PairedSample", "PlFit", "PlParams", "SufficientStats",
    "extract_paired_sample", "numerical_pl_mle", "pairwise_loglik",
    "solve_pl", "sufficient_statistics",
    "McConfig", "McReport", "Metrics", "TimingReport", "buffer_sweep",
    "compute_metrics", "run_montecarlo", "run_replication",
    "timing_benchmark",
    "SemFit", "WeightsMatrix", "build_knn_weights", "fit_sem_ml",
    "sem_loglik", "simulate_sem_errors",
    "DistanceSummary", "KdTree", "NeighborList", "Point", "PointSet",
    "build_tree", "distance_summary", "nearest_neighbors",
]
