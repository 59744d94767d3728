"""Truthful approximation mechanisms for barter exchange with bounded
trading cycles: conflict-graph reduction, loyal local search, mechanism
concatenation, and an adversarial verification harness."""

from .core import (
    NEG_INF,
    Exchange,
    LengthFunction,
    NegInfinity,
    TradingCycle,
    WishListVector,
    parse_rational,
    rational_str,
    respects,
    social_welfare,
    utility,
)
from .cyclegraph import (
    CycleGraph,
    IndependentSet,
    build_from_wishes,
    build_graph,
    enumerate_cycles,
)
from .localsearch import (
    Algorithm,
    ImprovementRule,
    LocalSearchTrace,
    RuleContractError,
    SearchStats,
    all_for_q_rule,
    check_precedes,
    concatenate,
    concatenate_all,
    expansion_rule,
    restrict_rule,
    run_local_search,
)
from .mechanisms import (
    LambdaProfile,
    Mechanism,
    RandomizedMechanism,
    greedy,
    greedy_mechanism,
    io,
    io_mechanism,
    lambda_profile,
    ls_mechanism,
    ls_q,
    nu_mechanism,
    nu_q,
    opt_ell,
    opt_mechanism,
    parse_mechanism,
    randomized_wrapper,
)
from .verification import (
    ManipulationFinding,
    OracleCapExceeded,
    RatioReport,
    fuzz_truthfulness_nodes,
    fuzz_truthfulness_wishlists,
    measure_ratio,
    oracle_max_weight_is,
    test_inpa,
)

__version__ = "0.1.0"
