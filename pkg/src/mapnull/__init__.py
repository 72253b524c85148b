"""Covariance-preserving Gaussian null test for Mapper community structure."""
from .community import CommunityResult, assign_points, detect_communities, louvain, modularity
from .errors import (DegenerateCovarianceError, DegenerateFilterError, DegenerateNullError,
                     DimensionError, InputError, MapNullError, MetricError, ParameterError,
                     PrecisionError, ReplicateError, StageError, UndefinedModularityError)
from .filters import (DistMatrix, FilterSpec, compute_filters, distance_matrix, knn_geodesic_mds_filter,
                      linf_centrality)
from .mapper import MapperConfig, MapperGraph, build_cover, build_mapper, cluster_preimage
from .nulltest import NullTestResult, PipelineConfig, run_pipeline, run_structured_null_test
from .numerics import CovModel, DataMatrix, classical_mds, ridge_regularize, sample_covariance, sample_gaussian
from .simulation import DGPSpec, ScenarioResult, generate_dgp, run_scenario
from .teststat import (FeatureSplit, dissociation, make_split, mc_pvalue, permutation_null,
                       statistic_variants, zscore)

__version__ = "0.1.0"

__all__ = [
    "CommunityResult", "assign_points", "detect_communities", "louvain", "modularity",
    "DegenerateCovarianceError", "DegenerateFilterError", "DegenerateNullError", "DimensionError",
    "InputError", "MapNullError", "MetricError", "ParameterError", "PrecisionError",
    "ReplicateError", "StageError", "UndefinedModularityError",
    "DistMatrix", "FilterSpec", "compute_filters", "distance_matrix", "knn_geodesic_mds_filter",
    "linf_centrality",
    "MapperConfig", "MapperGraph", "build_cover", "build_mapper", "cluster_preimage",
    "NullTestResult", "PipelineConfig", "run_pipeline", "run_structured_null_test",
    "CovModel", "DataMatrix", "classical_mds", "ridge_regularize", "sample_covariance",
    "sample_gaussian",
    "DGPSpec", "ScenarioResult", "generate_dgp", "run_scenario",
    "FeatureSplit", "dissociation", "make_split", "mc_pvalue", "permutation_null",
    "statistic_variants", "zscore",
]
