"""Decomposable Gaussian co-expression networks, cluster graphs and DE-gene uncertainty."""
from .cluster import (
    DEGD,
    NDEGD,
    ClusterGraph,
    LabeledNetwork,
    build_clusters,
    classify_cliques,
    cluster_network,
    uncertainty,
)
from .data import DataMatrix, read_data, read_labels, tiny_dataset_path
from .errors import (
    CoexnetError,
    DegenerateNetwork,
    InputError,
    NotChordal,
    NotPositiveDefinite,
    NumericalError,
    SingularSubset,
)
from .graph import (
    CliqueGraph,
    PerfectSequence,
    UndirectedGraph,
    clique_graph,
    connected_components,
    find_cliques,
    is_chordal,
    mcs_order,
    perfect_sequence,
)
from .search import SearchConfig, decomposable_search, eligible_edges, fit_decomposable, min_bic_forest
from .simulate import MseReport, SimulationPlan, run_study, sample_mvn
from .stats import (
    DecomposableModel,
    bic,
    edge_improvement,
    estimate_covariance,
    fit_model,
    model_loglik,
    ssd,
    subset_loglik,
)

__version__ = "0.1.0"

__all__ = [
    "CliqueGraph",
    "ClusterGraph",
    "CoexnetError",
    "DEGD",
    "DataMatrix",
    "DecomposableModel",
    "DegenerateNetwork",
    "InputError",
    "LabeledNetwork",
    "MseReport",
    "NDEGD",
    "NotChordal",
    "NotPositiveDefinite",
    "NumericalError",
    "PerfectSequence",
    "SearchConfig",
    "SimulationPlan",
    "SingularSubset",
    "UndirectedGraph",
    "bic",
    "build_clusters",
    "classify_cliques",
    "clique_graph",
    "cluster_network",
    "connected_components",
    "decomposable_search",
    "edge_improvement",
    "eligible_edges",
    "estimate_covariance",
    "find_cliques",
    "fit_decomposable",
    "fit_model",
    "is_chordal",
    "mcs_order",
    "min_bic_forest",
    "model_loglik",
    "perfect_sequence",
    "read_data",
    "read_labels",
    "run_study",
    "sample_mvn",
    "ssd",
    "subset_loglik",
    "tiny_dataset_path",
    "uncertainty",
]
