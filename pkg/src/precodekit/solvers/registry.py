"""Strategy registry: maps every strategy id to a solver handle that reads
its inputs from a scenario descriptor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from ..errors import ArchitectureMismatch, Infeasible, UnknownStrategy
from ..model import Architecture, ObjectiveKind
from .base import Hyperparams, SolverOutcome, SolverStrategy, StrategyId


@dataclass(frozen=True)
class SolverHandle:
    strategy_id: StrategyId
    run: Callable[..., SolverOutcome]
    defaults: Hyperparams
    architectures: frozenset[Architecture]
    objectives: frozenset[ObjectiveKind]
    summary: str

    @property
    def schema(self) -> dict[str, Any]:
        return Hyperparams.model_json_schema()

    def check(self, theta) -> None:
        arch = Architecture(theta.sys.architecture)
        if arch not in self.architectures:
            raise ArchitectureMismatch(
                f"{self.strategy_id.value} handles {sorted(a.value for a in self.architectures)},"
                f" scenario {theta.sys.scenario_id} is {arch.value}")
        if ObjectiveKind(theta.obj) not in self.objectives:
            raise ArchitectureMismatch(
                f"{self.strategy_id.value} does not optimize {ObjectiveKind(theta.obj).value}")

    def solve(self, theta, hyperparams: Hyperparams | dict | None = None, init=None) -> SolverOutcome:
        self.check(theta)
        if hyperparams is None:
            hp = self.defaults
        elif isinstance(hyperparams, Hyperparams):
            hp = hyperparams
        else:
            hp = self.defaults.model_copy(update=dict(hyperparams))
            hp = Hyperparams.model_validate(hp.model_dump())
        return self.run(theta, hp, init)

    def strategy(self) -> SolverStrategy:
        return SolverStrategy(strategy_id=self.strategy_id, hyperparams=self.defaults)


def _param(theta, kind: str, name: str, default=None):
    c = theta.first(kind)
    return default if c is None else c[name]


def _check_budget(outcome: SolverOutcome, theta) -> SolverOutcome:
    if outcome.objective > theta.p_max * (1 + 1e-9):
        raise Infeasible(f"minimum power {outcome.objective:.4g} W exceeds the "
                         f"{theta.p_max:g} W budget")
    return outcome


def _duality(theta, hp, init):
    from .duality import sinr_power_min_duality
    out = sinr_power_min_duality(theta.H, theta.sinr_targets(), theta.sigma2, hp)
    return _check_budget(out, theta)


def _fd(theta, hp, init):
    from .duality import fd_power_min
    eta = _param(theta, "SelfInterference", "eta", math.inf)
    out = fd_power_min(theta.H, theta.sinr_targets(), theta.ch.G_si, eta, theta.sigma2, hp)
    return _check_budget(out, theta)


def _ci_args(theta):
    c = theta.first("CiMargin") or theta.first("RobustCiMargin")
    return int(c["M"]) if c is not None else int(theta.sys.M)


def _ce(theta, hp, init):
    from .symbol_level import ce_phase_coordinate_descent
    return ce_phase_coordinate_descent(theta.H, theta.ch.symbols, theta.p_max, theta.sigma,
                                       _ci_args(theta), hp, init=init)


def _one_bit(theta, hp, init):
    from .symbol_level import one_bit_greedy_cd
    return one_bit_greedy_cd(theta.H, theta.ch.symbols, theta.p_max, theta.sigma,
                             _ci_args(theta), hp, init=init)


def _secrecy(theta, hp, init):
    from .secrecy import secrecy_nullspace_maxmin
    return secrecy_nullspace_maxmin(theta.H, theta.ch.h_eve, theta.p_max, theta.sigma2, hp,
                                    init=init)


def _i_th(theta):
    c = theta.first("InterferenceTemperature") or theta.first("RobustInterferenceTemperature")
    return math.inf if c is None else c["i_th"]


def _cr(theta, hp, init):
    from .cognitive import cr_sumrate_proj_ascent
    return cr_sumrate_proj_ascent(theta.H, theta.ch.g, theta.p_max, _i_th(theta), theta.sigma2,
                                  hp, init=init)


def _cr_robust(theta, hp, init):
    from .cognitive import cr_robust_sumrate
    eps = _param(theta, "RobustInterferenceTemperature", "epsilon", theta.ch.epsilon or 0.0)
    return cr_robust_sumrate(theta.H, theta.ch.g, eps, theta.p_max, _i_th(theta), theta.sigma2,
                             hp, init=init)


def _wmmse(theta, hp, init):
    from .wmmse import wmmse_sumrate
    return wmmse_sumrate(theta.H, theta.p_max, theta.sigma2, hp, init=init)


def _hybrid(theta, hp, init):
    from .hybrid import hybrid_robust_ci_altmin
    c = theta.first("RobustCiMargin")
    if c is None:
        M, threshold, eps = int(theta.sys.M), 0.0, 0.0
    else:
        M, threshold, eps = int(c["M"]), c["threshold"], c["epsilon"]
    return hybrid_robust_ci_altmin(theta.H, theta.ch.symbols, eps, M=M,
                                   delta=threshold * theta.sigma, n_rf=int(theta.sys.N_rf),
                                   p_max=theta.p_max, opts=hp, init=init)


_FD = frozenset({Architecture.FULLY_DIGITAL})
_S = StrategyId
_O = ObjectiveKind

_HANDLES = {
    h.strategy_id: h for h in [
        SolverHandle(_S.SINR_DUALITY_POWER_MIN, _duality, Hyperparams(max_iter=500, tol=1e-9),
                     _FD, frozenset({_O.POWER_MIN}),
                     "uplink-downlink duality fixed point with downlink power control"),
        SolverHandle(_S.FD_POWER_MIN, _fd, Hyperparams(max_iter=500, tol=1e-9),
                     _FD, frozenset({_O.POWER_MIN}),
                     "duality power-min with a bisected self-interference multiplier"),
        SolverHandle(_S.CE_PHASE_COORDINATE_DESCENT, _ce,
                     Hyperparams(max_iter=200, tol=1e-9, grid_points=32, penalty=4.0),
                     frozenset({Architecture.CONSTANT_ENVELOPE}), frozenset({_O.CI_MARGIN_MAX}),
                     "annealed soft-min ascent then exact cyclic phase coordinate sweeps"),
        SolverHandle(_S.ONE_BIT_GREEDY_CD, _one_bit, Hyperparams(max_iter=200),
                     frozenset({Architecture.ONE_BIT}), frozenset({_O.CI_MARGIN_MAX}),
                     "greedy antenna-wise search over the 1-bit alphabet"),
        SolverHandle(_S.SECRECY_NULLSPACE_MAX_MIN, _secrecy,
                     Hyperparams(max_iter=1000, tol=1e-6, penalty=10.0, step_init=1.0),
                     _FD, frozenset({_O.SECRECY_MAX_MIN}),
                     "soft-min projected ascent inside the eavesdropper null space"),
        SolverHandle(_S.CR_SUM_RATE_PROJ_ASCENT, _cr, Hyperparams(max_iter=1000, tol=1e-7,
                                                                  step_init=0.5),
                     _FD, frozenset({_O.SUM_RATE_MAX}),
                     "projected gradient ascent with power and interference projections"),
        SolverHandle(_S.CR_ROBUST_SUM_RATE, _cr_robust, Hyperparams(max_iter=1000, tol=1e-7,
                                                                    step_init=0.5),
                     _FD, frozenset({_O.SUM_RATE_MAX}),
                     "projected ascent under the worst-case interference bound"),
        SolverHandle(_S.WMMSE_SUM_RATE, _wmmse, Hyperparams(max_iter=1000, tol=1e-8),
                     _FD, frozenset({_O.SUM_RATE_MAX}),
                     "weighted-MMSE block-coordinate ascent"),
        SolverHandle(_S.HYBRID_ROBUST_CI_ALT_MIN, _hybrid,
                     Hyperparams(max_iter=200, tol=1e-4, penalty=10.0),
                     frozenset({Architecture.HYBRID}), frozenset({_O.POWER_MIN}),
                     "analog phase ascent alternating with an exact digital step"),
    ]
}


def registered_ids() -> list[StrategyId]:
    return list(_HANDLES)


def registry_lookup(strategy_id) -> SolverHandle:
    """Handle for ``strategy_id`` (enum member or string)."""
    try:
        return _HANDLES[StrategyId(strategy_id)]
    except (ValueError, KeyError):
        raise UnknownStrategy(f"strategy {getattr(strategy_id, 'value', strategy_id)!r} "
                              "is not registered") from None


def solve_default(strategy_id, theta, overrides: dict | None = None, init=None) -> SolverOutcome:
    handle = registry_lookup(strategy_id)
    return handle.solve(theta, overrides, init)
