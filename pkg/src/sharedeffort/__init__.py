"""Thresholded shared effort games: semantics, best response, equilibria,
closed-form predictions, fictitious play, and sweep experiments."""

from .core import (
    EPS_BUDGET,
    EPS_MEMBERSHIP,
    EPS_NE,
    Game,
    InvariantViolation,
    LevelStructure,
    ParseError,
    Profile,
    ShareReport,
    dump_game,
    dump_profile,
    evaluate,
    level_structure,
    load_game,
    load_profile,
    optimal_welfare,
    share_set,
    social_welfare,
)
from .bestresponse import (
    BestResponseResult,
    Breakpoints,
    GridTooLarge,
    Maximizer,
    SubsetSumReduction,
    best_response_2p,
    best_response_grid,
    breakpoints,
    subset_sum_game,
)
from .equilibrium import (
    CycleVerdict,
    DegenerateGame,
    Deviation,
    ExactModeUnavailable,
    NEVerdict,
    NotAnNE,
    efficiency,
    verify_cyclically_strong,
    verify_ne,
    whole_budget_players,
)
from .theory import (
    NoNE,
    NonpositiveFactor,
    Prediction,
    Verdict,
    WrongArity,
    WrongTheta,
    efficiency_two_player,
    poa_lower_bound_smooth,
    predict_n_player_sufficient,
    predict_theta0,
    predict_theta1,
    predict_two_player,
    scale_budgets_profile,
    scale_projects,
    tight_bound,
)
from .isfp import (
    BeliefState,
    IsfpConfig,
    IsfpResult,
    NoBestResponseError,
    RestartRecord,
    detect_ne,
    isfp_step,
    run_isfp,
)

__all__ = [name for name in dir() if not name.startswith("_")]
