"""Metric computation and per-constraint feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import metrics
from ..errors import ArchitectureMismatch
from ..model import (BeamformerMatrix, ConstraintKind, HybridPair, PhaseVector,
                     QuantizedVector)

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class MetricSet:
    """Scenario metrics; fields that do not apply to the scenario are None."""

    total_power: float
    per_user_sinr: tuple[float, ...] | None = None
    sum_rate: float | None = None
    normalized_margin: float | None = None
    robust_margin: float | None = None
    secrecy_rate: float | None = None

    @property
    def populated(self) -> dict[str, bool]:
        return {name: getattr(self, name) is not None
                for name in ("total_power", "per_user_sinr", "sum_rate", "normalized_margin",
                             "robust_margin", "secrecy_rate")}

    def value(self, name: str) -> float:
        v = getattr(self, name)
        if v is None:
            raise KeyError(f"metric {name!r} is not defined for this scenario")
        return float(v)


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str
    magnitude: float
    bound: float = field(default=0.0)


def _check_architecture(solution, theta) -> None:
    arch = getattr(solution, "architecture", None)
    if arch != theta.sys.architecture:
        raise ArchitectureMismatch(
            f"{type(solution).__name__} is a {arch} solution, scenario "
            f"{theta.sys.scenario_id} is {theta.sys.architecture}")
    n_streams = 1 if theta.ch.h_eve is not None else theta.sys.K
    if isinstance(solution, BeamformerMatrix):
        solution.check_shape(theta.sys.N_t, n_streams)
    elif isinstance(solution, HybridPair):
        solution.check_shape(theta.sys.N_t, theta.sys.K, theta.sys.N_rf)
    else:
        solution.check_shape(theta.sys.N_t, 1)


def _ci_params(theta):
    c = theta.first(ConstraintKind.CI_MARGIN) or theta.first(ConstraintKind.ROBUST_CI_MARGIN)
    return int(c["M"]) if c is not None else int(theta.sys.M)


def compute_metrics(solution, theta) -> MetricSet:
    """Metrics of ``solution`` on instance ``theta``.

    Raises ``ArchitectureMismatch`` when the solution type or shape does not
    fit the scenario.
    """
    _check_architecture(solution, theta)
    H, s2 = theta.H, theta.sigma2
    symbols = theta.ch.symbols
    power = solution.power(symbols)
    if isinstance(solution, BeamformerMatrix):
        if theta.ch.h_eve is not None:
            return MetricSet(total_power=power,
                             secrecy_rate=metrics.secrecy_rate(H, theta.ch.h_eve, solution.W, s2))
        sinr = metrics.sinr(H, solution.W, s2)
        return MetricSet(total_power=power, per_user_sinr=tuple(float(v) for v in sinr),
                         sum_rate=float(np.sum(np.log2(1.0 + sinr))))
    M = _ci_params(theta)
    x = solution.transmit(symbols)
    margin = metrics.normalized_margin(H, x, symbols, M, theta.sigma)
    robust = None
    rc = theta.first(ConstraintKind.ROBUST_CI_MARGIN)
    if rc is not None:
        robust = float(np.min(metrics.robust_ci_margins(H, x, symbols, M, rc["epsilon"]))
                       / theta.sigma)
    return MetricSet(total_power=power, normalized_margin=margin, robust_margin=robust)


def _lhs_rhs(c, solution, theta):
    """(lhs, rhs, scale) with the constraint read as lhs <= rhs."""
    H, s2 = theta.H, theta.sigma2
    kind = ConstraintKind(c.kind)
    symbols = theta.ch.symbols
    if kind is ConstraintKind.TOTAL_POWER:
        return solution.power(symbols), c["p_max"], c["p_max"]
    if kind in (ConstraintKind.PER_USER_SINR, ConstraintKind.PER_USER_RATE):
        sinr = float(metrics.sinr(H, solution.W, s2)[c.user])
        if kind is ConstraintKind.PER_USER_SINR:
            return c["gamma"], sinr, c["gamma"]
        return c["rate"], math.log2(1.0 + sinr), c["rate"]
    if kind is ConstraintKind.INTERFERENCE_TEMPERATURE:
        return metrics.interference_power(theta.ch.g, solution.W), c["i_th"], c["i_th"]
    if kind is ConstraintKind.ROBUST_INTERFERENCE_TEMPERATURE:
        return (metrics.robust_interference_power(theta.ch.g, solution.W, c["epsilon"]),
                c["i_th"], c["i_th"])
    if kind is ConstraintKind.SELF_INTERFERENCE:
        return float(np.sum(np.abs(theta.ch.G_si @ solution.W) ** 2)), c["eta"], c["eta"]
    if kind is ConstraintKind.UNIT_MODULUS:
        if isinstance(solution, PhaseVector):
            x = solution.signal()
            budget = theta.p_max if math.isfinite(theta.p_max) else solution.p_max
            ref = math.sqrt(budget / x.size)
            return float(np.max(np.abs(np.abs(x) - ref))), 0.0, ref
        if isinstance(solution, HybridPair):
            return float(np.max(np.abs(np.abs(solution.F_rf) - 1.0))), 0.0, 1.0
        raise ArchitectureMismatch("UnitModulus applies to phase or hybrid solutions")
    if kind is ConstraintKind.ONE_BIT:
        if not isinstance(solution, QuantizedVector):
            raise ArchitectureMismatch("OneBit applies to quantized solutions")
        x = solution.signal()
        scale = math.sqrt(solution.p_max / (2 * x.size))
        dev = np.maximum(np.abs(np.abs(x.real) - scale), np.abs(np.abs(x.imag) - scale))
        return float(np.max(dev)), 0.0, scale
    if kind is ConstraintKind.CI_MARGIN:
        x = solution.transmit(symbols)
        margin = metrics.normalized_margin(H, x, symbols, int(c["M"]), theta.sigma)
        return c["threshold"], margin, c["threshold"]
    if kind is ConstraintKind.ROBUST_CI_MARGIN:
        x = solution.transmit(symbols)
        m = float(np.min(metrics.robust_ci_margins(H, x, symbols, int(c["M"]), c["epsilon"])))
        return c["threshold"], m / theta.sigma, c["threshold"]
    if kind is ConstraintKind.EAVESDROPPER_RATE:
        eve = math.log2(1.0 + float(metrics.multicast_snr(theta.ch.h_eve, solution.W, s2)[0]))
        return eve, c["r_max"], c["r_max"]
    raise ValueError(f"unhandled constraint kind {kind}")


_AMPLITUDE = {ConstraintKind.UNIT_MODULUS, ConstraintKind.ONE_BIT}


def constraint_violations(solution, theta) -> list[Violation]:
    """Violation magnitude max(0, lhs - rhs) of every constraint, in order."""
    _check_architecture(solution, theta)
    out = []
    for i, c in enumerate(theta.con):
        lhs, rhs, scale = _lhs_rhs(c, solution, theta)
        kind = ConstraintKind(c.kind)
        # alphabet checks are relative to the entry amplitude itself
        bound = abs(float(scale)) if kind in _AMPLITUDE else max(1.0, abs(float(scale)))
        out.append(Violation(i, kind.value, max(0.0, float(lhs - rhs)), bound))
    return out


def feasibility_check(solution, theta, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Constraints violated beyond ``tol`` (relative to max(1, |bound|));
    empty iff the solution is feasible."""
    return [v for v in constraint_violations(solution, theta)
            if not v.magnitude <= tol * v.bound]
