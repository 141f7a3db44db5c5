"""Minimax-regret analysis of strict-uncertainty games and regret-based mechanism design."""

from .lp import LinearProgram, LpSolution, solve_lp
from .mechanism import Mechanism, verify_epr, verify_ic, verify_simplex
from .model import (
    MechanismProblem,
    PaymentsConfig,
    Report,
    ReportSpace,
    ScenarioError,
    Strategy,
    StrictGame,
    load_scenario,
    parse_scenario,
    validate,
)
from .optimizer import SolveOptions, SolveResult, solve_mechanism
from .regret import best_response_dynamics, check_equilibrium, check_minimax_dominant, strategy_max_regret
from .scenarios import auction_problem, builtin, divorce_problem

__version__ = "0.1.0"
