"""Simulation and estimation for random graph models with block structure.

Networks are partitioned into neighborhoods; edges exist only inside a
neighborhood, and neighborhoods are independent given the parameters.
The package covers model specification, Metropolis sampling, Monte Carlo
maximum likelihood with neighborhood bootstrap, goodness of fit, exact
small-graph enumeration, and replication experiments, plus a CLI.
"""

from .graphs import (
    GraphDataError,
    MultilevelGraph,
    empty_graph,
    hamming_distance,
    load_graph,
    save_graph,
    toggle_edge,
    uniform_partition,
)
from .statistics import (
    ESPCounts,
    Edges,
    MutualEdges,
    NodeMatch,
    TermSet,
    TransitiveEdges,
    change_stat,
    compute_stats,
    gof_summaries,
    parse_terms,
)
from .models import (
    EtaMap,
    GeometricWeights,
    Identity,
    Model,
    ModelError,
    SizeBucketDeviation,
    model_from_config,
)
from .exact import (
    BoundaryError,
    EnumerationBudget,
    ExactError,
    bernoulli_transitive_mean,
    conditional_bounds,
    exact_mle,
    exact_moments,
    exact_psi,
    state_distribution,
)
from .exact import exact_loglik
from .sampling import (
    SampleBatch,
    SamplerConfig,
    sample_neighborhood,
    simulate,
    simulate_graph,
)
from .estimation import (
    BootstrapResult,
    EffectiveSampleSizeError,
    EstimateResult,
    EstimationError,
    EstimatorConfig,
    bootstrap_se,
    mc_loglik_ratio,
    mc_score_info,
    mcmle,
    mple,
)
from .gof import GofError, GofReport, goodness_of_fit
from .config import (
    build_estimator_config,
    build_experiment_config,
    build_model,
    build_partition,
    build_sampler_config,
    build_theta,
    load_config,
)
from .experiments import (
    ExperimentConfig,
    run_concentration,
    run_consistency,
    worker_count,
)

__version__ = "0.1.0"

__all__ = [
    "GraphDataError",
    "MultilevelGraph",
    "empty_graph",
    "hamming_distance",
    "load_graph",
    "save_graph",
    "toggle_edge",
    "uniform_partition",
    "ESPCounts",
    "Edges",
    "MutualEdges",
    "NodeMatch",
    "TermSet",
    "TransitiveEdges",
    "change_stat",
    "compute_stats",
    "gof_summaries",
    "parse_terms",
    "EtaMap",
    "GeometricWeights",
    "Identity",
    "Model",
    "ModelError",
    "SizeBucketDeviation",
    "model_from_config",
    "BoundaryError",
    "EnumerationBudget",
    "ExactError",
    "bernoulli_transitive_mean",
    "conditional_bounds",
    "exact_loglik",
    "exact_mle",
    "exact_moments",
    "exact_psi",
    "state_distribution",
    "SamplerConfig",
    "SampleBatch",
    "sample_neighborhood",
    "simulate",
    "simulate_graph",
    "BootstrapResult",
    "EffectiveSampleSizeError",
    "EstimateResult",
    "EstimationError",
    "EstimatorConfig",
    "bootstrap_se",
    "mc_loglik_ratio",
    "mc_score_info",
    "mcmle",
    "mple",
    "GofError",
    "GofReport",
    "goodness_of_fit",
    "load_config",
    "build_model",
    "build_theta",
    "build_partition",
    "build_sampler_config",
    "build_estimator_config",
    "build_experiment_config",
    "ExperimentConfig",
    "run_consistency",
    "run_concentration",
    "worker_count",
    "__version__",
]
