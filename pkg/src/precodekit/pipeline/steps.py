"""Plan preprocessing (solver starting points) and postprocessing steps."""

from __future__ import annotations

import math

import numpy as np

from ..model import Architecture, BeamformerMatrix, HybridPair, PhaseVector, QuantizedVector
from ..precoders import ce_project, mrt, one_bit_quantize, rzf, scale_to_power, zf
from ..solvers.base import StrategyId

# baselines that run a registered solver themselves; never used as warm starts
SOLVER_BACKED = frozenset({"cd_ce", "cd_greedy_1bit", "socp_surrogate", "sinr_only",
                           "limited_alternating", "secrecy_unaware"})


class BaselineCache:
    """Lazily computed baseline solutions and metric values of one instance."""

    def __init__(self, theta, solutions: dict | None = None, values: dict | None = None):
        self.theta = theta
        self._solutions = dict(solutions or {})
        self._values = dict(values or {})

    def names(self) -> list[str]:
        from ..baselines import baseline_names
        return baseline_names(self.theta)

    def solution(self, name: str):
        if name not in self._solutions:
            from ..baselines import baseline_solution
            try:
                self._solutions[name] = baseline_solution(name, self.theta)
            except Exception:
                self._solutions[name] = None
        return self._solutions[name]

    def value(self, name: str) -> float | None:
        """Metric value of a baseline, or None when it is infeasible."""
        if name not in self._values:
            from ..harness.evaluation import compute_metrics, feasibility_check
            from .rules import METRIC_OF
            sol = self.solution(name)
            v = None
            if sol is not None and not feasibility_check(sol, self.theta):
                v = compute_metrics(sol, self.theta).value(METRIC_OF[self.theta.obj])
            self._values[name] = v
        return self._values[name]

    def best_value(self) -> float | None:
        vals = [v for v in (self.value(n) for n in self.names()) if v is not None]
        if not vals:
            return None
        return min(vals) if self.theta.obj.direction == "min" else max(vals)

    def warm_starts(self) -> list:
        return [s for s in (self.solution(n) for n in self.names() if n not in SOLVER_BACKED)
                if s is not None]


def _random_stream(theta, salt: int) -> np.random.Generator:
    seed = 0 if theta.seed is None else int(theta.seed)
    return np.random.default_rng(np.random.SeedSequence([seed, theta.sys.scenario_id, salt]))


def _composite(theta, name: str) -> np.ndarray | None:
    H, p, s = theta.H, theta.p_max, theta.ch.symbols
    try:
        W = {"mrt": lambda: mrt(H, p).W, "zf": lambda: zf(H, p).W,
             "rzf": lambda: rzf(H, p, theta.sigma2).W}[name]()
    except Exception:
        return None
    return W @ s


def build_init(plan, theta, cache: BaselineCache | None = None):
    """Solver starting points requested by ``plan.preprocessing``.

    Returns ``(init, warnings)``; ``init`` is None when the solver default
    starts apply.
    """
    steps = list(plan.preprocessing)
    if not steps:
        return None, []
    sid = StrategyId(plan.strategy.strategy_id)
    arch = Architecture(theta.sys.architecture)
    cache = cache or BaselineCache(theta)
    p = theta.p_max
    warnings: list[str] = []
    starts: list = []

    if arch in (Architecture.CONSTANT_ENVELOPE, Architecture.ONE_BIT):
        ce = arch is Architecture.CONSTANT_ENVELOPE

        def convert(x):
            return ce_project(x, p).theta if ce else one_bit_quantize(x, p).signal()

        for step in steps:
            if step == "mrt-composite-init":
                starts.append(convert(_composite(theta, "mrt")))
            elif step == "zf-ce-init":
                x = _composite(theta, "zf")
                if x is not None:
                    starts.append(convert(x))
            elif step == "baseline-warm-start":
                for sol in cache.warm_starts():
                    starts.append(sol.theta if isinstance(sol, PhaseVector) else sol.signal())
            elif step == "multi-start-init":
                for name in ("zf", "rzf"):
                    x = _composite(theta, name)
                    if x is not None:
                        starts.append(convert(x))
                rng = _random_stream(theta, 104729)
                N = theta.sys.N_t
                for _ in range(plan.strategy.hyperparams.grid_points):
                    z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
                    starts.append(convert(z))
        return starts or None, warnings

    if arch is Architecture.FULLY_DIGITAL and sid in (StrategyId.CR_SUM_RATE_PROJ_ASCENT,
                                                      StrategyId.CR_ROBUST_SUM_RATE,
                                                      StrategyId.WMMSE_SUM_RATE,
                                                      StrategyId.SECRECY_NULLSPACE_MAX_MIN):
        extra = []
        for step in steps:
            if step == "baseline-warm-start":
                extra += [s.W for s in cache.warm_starts() if isinstance(s, BeamformerMatrix)]
            else:
                warnings.append(f"preprocessing step {step} does not apply to {sid.value}")
        if not extra:
            return None, warnings
        if sid is StrategyId.SECRECY_NULLSPACE_MAX_MIN:
            return extra, warnings      # appended to the solver's own starts
        if sid is StrategyId.WMMSE_SUM_RATE:
            from ..precoders import slnr
            base = _composite_matrix(theta) + [slnr(theta.H, p, theta.sigma2).W]
        else:
            from ..solvers.cognitive import default_starts
            base = default_starts(theta.H, theta.ch.g, p, theta.sigma2)
        return base + extra, warnings

    warnings += [f"preprocessing step {s} does not apply to {sid.value}" for s in steps]
    return None, warnings


def _composite_matrix(theta) -> list:
    out = []
    for f in (lambda: zf(theta.H, theta.p_max).W, lambda: rzf(theta.H, theta.p_max, theta.sigma2).W,
              lambda: mrt(theta.H, theta.p_max).W):
        try:
            out.append(f())
        except Exception:
            pass
    return out


def _scale_power(solution, target: float, symbols):
    """Copy of ``solution`` with transmit power ``target`` where the
    architecture allows it."""
    if isinstance(solution, BeamformerMatrix):
        return BeamformerMatrix(scale_to_power(solution.W, target))
    if isinstance(solution, HybridPair):
        return HybridPair(solution.F_rf,
                          solution.F_bb * math.sqrt(target / solution.power(symbols)))
    if isinstance(solution, PhaseVector):
        return PhaseVector(solution.theta, target)
    if isinstance(solution, QuantizedVector):
        return one_bit_quantize(solution.signal(), target)
    raise TypeError(f"cannot rescale {type(solution).__name__}")


def apply_postprocessing(solution, theta, steps) -> tuple[object, list[str]]:
    """Apply ``steps`` in order; returns the new solution and warnings."""
    warnings = []
    p_max = theta.p_max
    for step in steps:
        power = solution.power(theta.ch.symbols)
        if step == "power-rescale":
            if power > p_max:
                solution = _scale_power(solution, p_max, theta.ch.symbols)
                warnings.append(f"power-rescale: scaled {power:.6g} W down to {p_max:g} W")
        elif step == "fault:overdrive":
            solution = _scale_power(solution, 1.1 * p_max, theta.ch.symbols)
        else:
            raise ValueError(f"unknown postprocessing step {step!r}")
    return solution, warnings
