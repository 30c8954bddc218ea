"""Lookahead policy iteration for two-player zero-sum discounted Markov games."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AssumptionViolated,
    DimensionMismatch,
    GameValidationError,
    MaxItersExceeded,
    MGPIError,
    NumericalFailure,
    ParameterOutOfRange,
    RankDeficient,
    SingularSystem,
)
from .game import (  # noqa: E402
    INFINITE,
    GameModel,
    StochasticPolicyPair,
    exact_policy_value,
    game_from_arrays,
    load_game,
    q_from_v,
    random_game,
    save_game,
    validate_game,
)
from .matrix_game import MatrixGameSolution, best_response_value, solve_matrix_game  # noqa: E402
from .bellman import (  # noqa: E402
    apply_bellman,
    apply_min_operator,
    apply_policy_operator,
    composite_tmh,
    lookahead,
    rollout,
)
from .planners import (  # noqa: E402
    PlannerConfig,
    check_assumption1,
    generalized_pi,
    hoffman_karp,
    min_lookahead,
    naive_pi,
    solve_equilibrium,
    lookahead_pi_rate,
    value_iteration,
)
from .trace import ConvergenceTrace, OpCounter  # noqa: E402

__all__ = [
    "__version__",
    "AssumptionViolated",
    "DimensionMismatch",
    "GameValidationError",
    "MaxItersExceeded",
    "MGPIError",
    "NumericalFailure",
    "ParameterOutOfRange",
    "RankDeficient",
    "SingularSystem",
    "INFINITE",
    "GameModel",
    "StochasticPolicyPair",
    "exact_policy_value",
    "game_from_arrays",
    "load_game",
    "q_from_v",
    "random_game",
    "save_game",
    "validate_game",
    "apply_bellman",
    "apply_min_operator",
    "apply_policy_operator",
    "composite_tmh",
    "lookahead",
    "rollout",
    "PlannerConfig",
    "check_assumption1",
    "generalized_pi",
    "hoffman_karp",
    "min_lookahead",
    "naive_pi",
    "solve_equilibrium",
    "lookahead_pi_rate",
    "value_iteration",
    "MatrixGameSolution",
    "best_response_value",
    "solve_matrix_game",
    "ConvergenceTrace",
    "OpCounter",
]
