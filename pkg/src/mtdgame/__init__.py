"""Cost-aware randomized switching strategies for moving target defense.

Builds a Bayesian Stackelberg game from a technology catalog, attacker
types and CVE data, solves for the defender's optimal mixed switching
strategy under non-uniform switching costs, and provides vulnerability
prioritization (k-CV) and robustness (NLR sensitivity) analyses.
"""

from .analysis import (
    AlphaPoint,
    BudgetExceededError,
    KcvResult,
    PerturbationError,
    SensitivityReport,
    alpha_sweep,
    find_kcv,
    nlr,
    perturb_probabilities,
    remove_attacks,
    sensitivity_sweep,
)
from .cvss import (
    CvssParseError,
    CvssVector,
    ScoreTriple,
    base_score,
    exploitability_score,
    format_vector,
    impact_score,
    parse_vector,
    score_vector,
)
from .game import (
    NO_OP,
    AttackerType,
    Configuration,
    GameDefinition,
    GameSpec,
    GameValidationError,
    RewardModel,
    TechnologyCatalog,
    assemble_from_definition,
    assemble_game,
    attack_affects,
    build_rewards,
    in_arsenal,
    load_game_file,
    with_alpha,
    with_switch_cost,
    with_type_distribution,
)
from .lp import LpError, LpSolution, LpStatus, lp_maximize
from .nvd import (
    AttackCatalog,
    AttackRecord,
    FeedError,
    FeedLoadResult,
    IngestStats,
    RawCveRecord,
    build_attack_catalog,
    filter_by_date,
    load_catalog_file,
    load_feed,
    match_technologies,
    save_catalog_file,
)
from .solver import (
    BestResponse,
    SolveResult,
    StrategyEvaluation,
    best_response,
    evaluate_strategy,
    exact_switching_cost,
    solve_bsg,
    transport_min_cost,
    uniform_strategy,
)

__version__ = "0.1.0"
