"""Runtime-analysis laboratory for the elitist (1+N) EA on pseudo-Boolean
functions: simulation, exact Markov-chain analysis and drift bound checks."""
from ._accel import backend_name
from .core import BitString, SideClass, classify_side, enumerate_level, level_index, ones_count
from .drift import (
    BoundKind,
    BoundReport,
    DistanceFunction,
    DistanceKind,
    bound_formula,
    estimate_drift_mc,
    expected_initial_distance,
    make_distance,
    verify_lemma_inequalities,
    verify_lower_bound_theorem,
    verify_upper_bound_theorem,
)
from .engine import BatchStats, EaConfig, RunRecord, batch_run, mutate, run_ea, select
from .errors import (
    CapExceeded,
    ConfigError,
    DomainError,
    DriftLabError,
    LengthMismatch,
    NotLinearLike,
    OptimalState,
    SingularSystem,
)
from .experiments import (
    CutoffEstimate,
    ExperimentConfig,
    cutoff_estimate,
    invariant_distribution_check,
    scaling_experiment,
)
from .fitness import FitnessFunction, PropertyReport, check_linear_like, check_monotonic, evaluate
from .oracle import (
    HittingTimeTable,
    StateDistribution,
    TransitionModel,
    build_model,
    child_distribution,
    drift_cdf,
    evolve_distribution,
    exact_average_drift,
    exact_hitting_time,
    exact_pointwise_drift,
    transition_row,
)

__version__ = "0.1.0"
