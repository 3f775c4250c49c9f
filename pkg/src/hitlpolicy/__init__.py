"""Plan and monitor human review of ML decisions."""

from .control import (
    EmpiricalCdf,
    Interval,
    bootstrap_interval,
    clt_interval,
    ecdf_eval,
    normal_quantile,
    percentile_interval,
)
from .drift import (
    CategoricalDist,
    DriftReport,
    PageHinkley,
    chi_square_stat,
    cohens_w,
    diff_in_proportions,
    dissimilarity_index,
    hellinger,
    holm_adjust,
    jsd,
    monitor_stream,
    ph_update,
)
from .optimize import (
    InfeasibleError,
    OptimizationResult,
    brute_force_policy_search,
    brute_force_time_search,
    optimize_review_budget,
    optimize_time_budget,
    target_accuracy_min_cost,
)
from .policy import (
    Budget,
    ClassProfile,
    HumanModel,
    Policy,
    PolicyMetrics,
    Scenario,
    TimeModel,
    TimePolicy,
    ValidationError,
    elimination_policy,
    evaluate_policy,
    evaluate_time_policy,
    expected_accuracy,
    expected_cost,
    minimax_accuracy,
    policy_accuracy_se,
    routing_scenario,
    sample_size_heuristic,
    validate_scenario,
)
from .simulate import (
    DriftChange,
    OutcomeRecord,
    OutcomeStream,
    SimSummary,
    mc_accuracy_estimate,
    simulate_batch,
)
from .tree import TreeNode, path_correct_prob, tree_from_dict, worst_path

__version__ = "0.1.0"
