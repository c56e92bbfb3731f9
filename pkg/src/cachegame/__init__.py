"""Privacy-aware redundant video requesting and edge caching, as a game.

A discrete-time simulator of one edge cache (the leader, choosing per-video
cache fractions) and many user devices (followers, padding their genuine
video demand with decoy requests).  Closed-form best responses drive both
online algorithms; brute-force oracles verify them.
"""

from .baselines import (
    BoundedCache,
    derive_equivalent_capacity,
    lfu_step,
    lru_step,
    nr_request,
    random_request,
)
from .catalog import (
    GenuineTrace,
    TraceFormatError,
    TraceGenConfig,
    TraceIntegrityError,
    VideoCatalog,
    concat_traces,
    generate_catalog,
    generate_trace,
    load_trace,
    read_catalog_csv,
    read_trace_csv,
    split_trace,
    write_catalog_csv,
    write_trace_csv,
)
from .engine import ExperimentConfig, SweepResult, export_results, run_simulation, sweep
from .equilibrium import (
    EquilibriumReport,
    ResponseSingularity,
    SmallGame,
    StandardFunctionReport,
    best_response_matrix,
    check_equilibrium,
    check_standard_function,
    clamped_response,
    follower_best_response,
    follower_fixed_point,
    fractional_response,
    leader_best_response,
    leader_best_response_vec,
    random_small_game,
    solve_equilibrium,
    verify_equilibrium_bruteforce,
)
from .metrics import (
    PdrReport,
    average_fresh_redundant,
    average_redundant,
    compute_bor,
    compute_chr,
    compute_pdr,
    utility_stability,
    utility_timeseries,
)
from .online import (
    crvr_step,
    evc_step,
    mav_update,
    redundant_request_count,
    update_newcomer_estimate,
)
from .params import ConfigError, GameParams
from .privacy import disclosure_change, disclosure_pmf, self_entropy, user_disclosure
from .results import RunResult
from .state import (
    ContractViolation,
    SystemState,
    apply_round,
    first_time_request_count,
    init_state,
    update_popularity,
    view_preference,
    view_preference_row,
)
from .utility import UdContext, ec_utility, ec_utility_terms, ud_caching_benefit, ud_caching_cost, ud_utility

__version__ = "0.1.0"
