"""Iterative precoding solvers, the strategy registry and brute-force oracles."""

from .base import Hyperparams, SolverOutcome, SolverStrategy, StrategyId
from .cognitive import cr_robust_sumrate, cr_sumrate_proj_ascent
from .duality import fd_power_min, sinr_power_min_duality
from .hybrid import hybrid_robust_ci_altmin
from .oracle import exhaustive_oracle
from .registry import registered_ids, registry_lookup, solve_default
from .secrecy import secrecy_nullspace_maxmin
from .symbol_level import ce_phase_coordinate_descent, one_bit_greedy_cd
from .wmmse import wmmse_sumrate

__all__ = [
    "Hyperparams", "SolverOutcome", "SolverStrategy", "StrategyId",
    "cr_robust_sumrate", "cr_sumrate_proj_ascent", "fd_power_min", "sinr_power_min_duality",
    "hybrid_robust_ci_altmin", "exhaustive_oracle", "registered_ids", "registry_lookup",
    "solve_default", "secrecy_nullspace_maxmin", "ce_phase_coordinate_descent",
    "one_bit_greedy_cd", "wmmse_sumrate",
]
