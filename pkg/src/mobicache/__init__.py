"""Coded cache placement for mobile users under delivery deadlines.

The library models a set of small cells, each caching erasure-coded parity
bits of a video library. A user follows a random path across cells; whatever
cannot be collected from the caches it visits before the deadline must be
fetched from the macro cell. The package builds placements that minimize
that expected macro-cell download, evaluates them over exact or sampled
mobility ensembles, and certifies the construction against brute-force and
linear-programming oracles.
"""

from .evaluation import EvalReport, deficit, evaluate, evaluate_delta
from .lp import (
    Constraint,
    LinearProgram,
    brute_force_optimal,
    build_p2,
    export_lp,
    linearize_pair,
)
from .mobility import (
    MobilityModel,
    PathEnsemble,
    SojournCCDF,
    build_grid_mobility,
    enumerate_paths,
    sample_paths,
    sojourn_ccdf,
)
from .model import (
    BudgetExceededError,
    CachingPolicy,
    CellNetwork,
    Deadline,
    InvalidModelError,
    PolicyVerdict,
    ShapeError,
    VideoLibrary,
    grid_adjacency,
    t_min,
    validate_policy,
    zipf_popularity,
)
from .policies import (
    GammaTable,
    SwapCandidates,
    allocate_by_gamma,
    gamma_policy,
    gamma_table,
    greedy_policy,
    most_popular_policy,
)
from .scenario import (
    ConfigError,
    Scenario,
    format_sweep_csv,
    preset_scenario,
    run_scenario,
    scenario_from_mapping,
    scenario_from_yaml,
)

__version__ = "1.0.0"

__all__ = [
    "BudgetExceededError",
    "CachingPolicy",
    "CellNetwork",
    "ConfigError",
    "Constraint",
    "Deadline",
    "EvalReport",
    "GammaTable",
    "InvalidModelError",
    "LinearProgram",
    "MobilityModel",
    "PathEnsemble",
    "PolicyVerdict",
    "Scenario",
    "ShapeError",
    "SojournCCDF",
    "SwapCandidates",
    "VideoLibrary",
    "allocate_by_gamma",
    "brute_force_optimal",
    "build_grid_mobility",
    "build_p2",
    "deficit",
    "enumerate_paths",
    "evaluate",
    "evaluate_delta",
    "export_lp",
    "format_sweep_csv",
    "gamma_policy",
    "gamma_table",
    "greedy_policy",
    "grid_adjacency",
    "linearize_pair",
    "most_popular_policy",
    "preset_scenario",
    "run_scenario",
    "sample_paths",
    "scenario_from_mapping",
    "scenario_from_yaml",
    "sojourn_ccdf",
    "t_min",
    "validate_policy",
    "zipf_popularity",
]
