"""Tabular features to similarity-preserving 2-D images.

Pipeline: load a feature table (ingest), measure pairwise feature
distances, seed a planar embedding (embed), refine it with a Bayesian
sampler (bmds), pin features to grid pixels and polish by local search
(gridmap), then render per-sample images (images).  A synthetic benchmark
generator (synth) and evaluation metrics (metrics) round the toolkit out.
"""

from .bmds import (
    BmdsConfig,
    BmdsResult,
    DiagnosticsReport,
    McmcTrace,
    diagnostics,
    gibbs_sigma2,
    log_likelihood,
    log_posterior,
    run_mcmc,
    write_location_samples,
    write_trace,
)
from .distances import DistanceMatrix, feature_distances, normalize_max
from .embed import (
    Embedding2D,
    isomap_embed,
    le_embed,
    lle_embed,
    mds_embed,
    pca_coords,
    random_embed,
    rescale_unit,
    symmetric_eigh,
)
from .errors import ConfigError, DataError, NumericError, RefinedError
from .gridmap import (
    FeatureGridMap,
    MapCost,
    automorphs,
    cost_delta,
    discretize,
    grid_size_for,
    hill_climb,
    map_cost,
    map_distance_correlation,
    read_map,
    write_map,
)
from .images import ImageStack, read_pgm, read_tensor, render, write_pgm, write_tensor
from .ingest import (
    FeatureTable,
    SplitSpec,
    bootstrap_oversample,
    filter_features,
    knn_impute,
    load_csv,
    minmax_normalize,
    relieff_select,
    split,
)
from .metrics import (
    ClassificationEval,
    McNemarResult,
    RegressionEval,
    auroc,
    bias_correct,
    binomial_ci,
    bootstrap_ci,
    classification_eval,
    gap_statistic,
    mcnemar,
    regression_eval,
    robustness,
    two_means_1d,
)
from .synth import SynthSpec, generate, generate_with_weights

__version__ = "0.1.0"

__all__ = [
    "BmdsConfig",
    "BmdsResult",
    "ClassificationEval",
    "ConfigError",
    "DataError",
    "DiagnosticsReport",
    "DistanceMatrix",
    "Embedding2D",
    "FeatureGridMap",
    "FeatureTable",
    "ImageStack",
    "MapCost",
    "McNemarResult",
    "McmcTrace",
    "NumericError",
    "RefinedError",
    "RegressionEval",
    "SplitSpec",
    "SynthSpec",
    "auroc",
    "automorphs",
    "bias_correct",
    "binomial_ci",
    "bootstrap_ci",
    "bootstrap_oversample",
    "classification_eval",
    "cost_delta",
    "diagnostics",
    "discretize",
    "feature_distances",
    "filter_features",
    "gap_statistic",
    "generate",
    "generate_with_weights",
    "gibbs_sigma2",
    "grid_size_for",
    "hill_climb",
    "isomap_embed",
    "knn_impute",
    "le_embed",
    "lle_embed",
    "load_csv",
    "log_likelihood",
    "log_posterior",
    "map_cost",
    "map_distance_correlation",
    "mcnemar",
    "mds_embed",
    "minmax_normalize",
    "normalize_max",
    "pca_coords",
    "random_embed",
    "read_map",
    "read_pgm",
    "read_tensor",
    "regression_eval",
    "relieff_select",
    "render",
    "rescale_unit",
    "robustness",
    "run_mcmc",
    "split",
    "symmetric_eigh",
    "two_means_1d",
    "write_location_samples",
    "write_map",
    "write_pgm",
    "write_tensor",
    "write_trace",
]
