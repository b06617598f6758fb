"""Strategy records and the outcome type every solver returns."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from ..model import Solution


class StrategyId(str, enum.Enum):
    SINR_DUALITY_POWER_MIN = "SinrDualityPowerMin"
    CE_PHASE_COORDINATE_DESCENT = "CePhaseCoordinateDescent"
    ONE_BIT_GREEDY_CD = "OneBitGreedyCD"
    SECRECY_NULLSPACE_MAX_MIN = "SecrecyNullspaceMaxMin"
    FD_POWER_MIN = "FdPowerMin"
    CR_SUM_RATE_PROJ_ASCENT = "CrSumRateProjAscent"
    CR_ROBUST_SUM_RATE = "CrRobustSumRate"
    WMMSE_SUM_RATE = "WmmseSumRate"
    HYBRID_ROBUST_CI_ALT_MIN = "HybridRobustCiAltMin"
    # reserved, intentionally not registered
    SEMIDEFINITE_RELAXATION = "SemidefiniteRelaxation"


class Hyperparams(BaseModel):
    """Tunable knobs shared by all strategies.

    ``target_scale`` inflates SINR targets (power-min strategies only); the
    refinement loop uses it to buy back tiny rate violations.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iter: int = Field(500, ge=1, le=100_000)
    tol: float = Field(1e-9, gt=0, le=1.0)
    grid_points: int = Field(32, ge=2, le=4096)
    step_init: float = Field(1.0, gt=0)
    penalty: float = Field(10.0, gt=0)
    target_scale: float = Field(1.0, ge=1.0, le=10.0)


class SolverStrategy(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy_id: StrategyId
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)


@dataclass(frozen=True)
class SolverOutcome:
    solution: Solution
    objective: float
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trace", [float(v) for v in self.trace])
        if len(self.trace) != self.iterations:
            raise ValueError(f"trace length {len(self.trace)} != iterations {self.iterations}")


def as_hyperparams(opts) -> Hyperparams:
    if opts is None:
        return Hyperparams()
    if isinstance(opts, Hyperparams):
        return opts
    return Hyperparams(**dict(opts))


def golden_section_max(f, lo: float, hi: float, tol: float, max_eval: int = 200):
    """Maximize a scalar function on [lo, hi]; returns (x, f(x))."""
    invphi = 0.6180339887498949
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    n = 0
    while b - a > tol and n < max_eval:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        n += 1
    return (c, fc) if fc >= fd else (d, fd)
