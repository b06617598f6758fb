"""Deterministic rule backend: table-driven implementations of the four
pipeline stages."""

from __future__ import annotations

import json
import re

from ..errors import NoApplicableStrategy, SchemaViolation
from ..model import Architecture, ConstraintKind, ObjectiveKind
from ..solvers.base import SolverStrategy, StrategyId
from ..solvers.registry import registry_lookup
from .types import (SECTION_HEADINGS, ConstraintRef, ImplementationPrompt, Objective,
                    ProblemSpec, PromptSection, SolverPlan, Variable)

_K = ConstraintKind
_A = Architecture
_S = StrategyId

# convexity annotation per constraint kind; CI margins are linear (convex)
# in a fully digital x and nonconvex once the hardware restricts x
_ALWAYS_NONCONVEX = {_K.UNIT_MODULUS, _K.ONE_BIT}
_HARDWARE_DEPENDENT = {_K.CI_MARGIN, _K.ROBUST_CI_MARGIN}

COUPLING = {
    _K.TOTAL_POWER: "joint",
    _K.PER_USER_SINR: "per_user",
    _K.PER_USER_RATE: "per_user",
    _K.INTERFERENCE_TEMPERATURE: "joint",
    _K.ROBUST_INTERFERENCE_TEMPERATURE: "joint",
    _K.SELF_INTERFERENCE: "joint",
    _K.UNIT_MODULUS: "per_antenna",
    _K.ONE_BIT: "per_antenna",
    _K.CI_MARGIN: "per_user",
    _K.ROBUST_CI_MARGIN: "per_user",
    _K.EAVESDROPPER_RATE: "joint",
}

METRIC_OF = {
    ObjectiveKind.POWER_MIN: "total_power",
    ObjectiveKind.CI_MARGIN_MAX: "normalized_margin",
    ObjectiveKind.SECRECY_MAX_MIN: "secrecy_rate",
    ObjectiveKind.SUM_RATE_MAX: "sum_rate",
}

# Decision table rows: (objective, hardware, feature, ranked strategies).
# The first row whose feature is present in the spec wins; feature "any"
# always matches.
DECISION_TABLE: list[tuple[ObjectiveKind, Architecture, str, tuple[StrategyId, ...]]] = [
    (ObjectiveKind.POWER_MIN, _A.FULLY_DIGITAL, "self-interference",
     (_S.FD_POWER_MIN, _S.SINR_DUALITY_POWER_MIN)),
    (ObjectiveKind.POWER_MIN, _A.FULLY_DIGITAL, "any",
     (_S.SINR_DUALITY_POWER_MIN, _S.FD_POWER_MIN)),
    (ObjectiveKind.POWER_MIN, _A.HYBRID, "any", (_S.HYBRID_ROBUST_CI_ALT_MIN,)),
    (ObjectiveKind.CI_MARGIN_MAX, _A.CONSTANT_ENVELOPE, "any", (_S.CE_PHASE_COORDINATE_DESCENT,)),
    (ObjectiveKind.CI_MARGIN_MAX, _A.ONE_BIT, "any", (_S.ONE_BIT_GREEDY_CD,)),
    (ObjectiveKind.SECRECY_MAX_MIN, _A.FULLY_DIGITAL, "any", (_S.SECRECY_NULLSPACE_MAX_MIN,)),
    (ObjectiveKind.SUM_RATE_MAX, _A.FULLY_DIGITAL, "robust",
     (_S.CR_ROBUST_SUM_RATE, _S.CR_SUM_RATE_PROJ_ASCENT)),
    (ObjectiveKind.SUM_RATE_MAX, _A.FULLY_DIGITAL, "interference",
     (_S.CR_SUM_RATE_PROJ_ASCENT, _S.CR_ROBUST_SUM_RATE)),
    (ObjectiveKind.SUM_RATE_MAX, _A.FULLY_DIGITAL, "any",
     (_S.WMMSE_SUM_RATE, _S.CR_SUM_RATE_PROJ_ASCENT)),
]

# preprocessing template per strategy
PREPROCESSING = {
    _S.ONE_BIT_GREEDY_CD: ["mrt-composite-init", "baseline-warm-start"],
    _S.CE_PHASE_COORDINATE_DESCENT: ["zf-ce-init", "mrt-composite-init"],
    _S.SECRECY_NULLSPACE_MAX_MIN: ["baseline-warm-start"],
    _S.CR_SUM_RATE_PROJ_ASCENT: ["baseline-warm-start"],
    _S.CR_ROBUST_SUM_RATE: ["baseline-warm-start"],
    _S.WMMSE_SUM_RATE: ["baseline-warm-start"],
}

STEPS = {
    _S.SINR_DUALITY_POWER_MIN: ["iterate uplink powers q_k = 1/((1 + 1/gamma_k) h_k^H S^-1 h_k)",
                                "take MMSE receive directions as downlink beam directions",
                                "solve the downlink power-control linear system"],
    _S.FD_POWER_MIN: ["bisect the self-interference multiplier mu",
                      "run the duality fixed point with the mu-augmented covariance",
                      "stop when the self-interference bound is tight or slack at mu = 0"],
    _S.CE_PHASE_COORDINATE_DESCENT: ["start from CE projections of composite signals",
                                     "anneal a soft-min surrogate of the CI margin",
                                     "sweep each phase to its best breakpoint or grid point"],
    _S.ONE_BIT_GREEDY_CD: ["quantize composite signals to the 1-bit alphabet",
                           "move each antenna to its best alphabet point",
                           "stop when a full pass changes nothing"],
    _S.SECRECY_NULLSPACE_MAX_MIN: ["project onto the eavesdropper null space",
                                   "ascend the soft-min user SNR on the power sphere",
                                   "double the temperature per stage until the gain stalls"],
    _S.CR_SUM_RATE_PROJ_ASCENT: ["ascend the sum rate with Barzilai-Borwein steps",
                                 "project onto the power and interference sets",
                                 "accept only nondecreasing steps"],
    _S.CR_ROBUST_SUM_RATE: ["ascend the sum rate with Barzilai-Borwein steps",
                            "project onto the worst-case interference set",
                            "accept only nondecreasing steps"],
    _S.WMMSE_SUM_RATE: ["update receive scalars", "update MSE weights",
                        "update the transmit matrix with a bisected multiplier"],
    _S.HYBRID_ROBUST_CI_ALT_MIN: ["solve the digital step as a least-distance program",
                                  "ascend the analog phases on the soft-min margin ratio",
                                  "keep an analog update only if the re-solved digital step "
                                  "improves"],
}


def constraint_convex(kind: ConstraintKind, architecture: Architecture) -> bool:
    kind = ConstraintKind(kind)
    if kind in _ALWAYS_NONCONVEX:
        return False
    if kind in _HARDWARE_DEPENDENT:
        return Architecture(architecture) is _A.FULLY_DIGITAL
    return True


def _variables(theta) -> list[Variable]:
    s = theta.sys
    arch = Architecture(s.architecture)
    if arch is _A.FULLY_DIGITAL:
        cols = 1 if theta.ch.h_eve is not None else s.K
        return [Variable(name="W", shape=[s.N_t, cols], domain="BeamformerMatrix")]
    if arch is _A.CONSTANT_ENVELOPE:
        return [Variable(name="theta", shape=[s.N_t], domain="PhaseVector")]
    if arch is _A.ONE_BIT:
        return [Variable(name="x", shape=[s.N_t], domain="QuantizedVector")]
    return [Variable(name="F_rf", shape=[s.N_t, s.N_rf], domain="AnalogPrecoder"),
            Variable(name="F_bb", shape=[s.N_rf, s.K], domain="DigitalPrecoder")]


def spec_features(spec: ProblemSpec) -> set[str]:
    kinds = {ConstraintKind(c.kind) for c in spec.constraints}
    feats = {"any"}
    if kinds & {_K.ROBUST_INTERFERENCE_TEMPERATURE, _K.ROBUST_CI_MARGIN}:
        feats.add("robust")
    if kinds & {_K.INTERFERENCE_TEMPERATURE, _K.ROBUST_INTERFERENCE_TEMPERATURE}:
        feats.add("interference")
    if _K.SELF_INTERFERENCE in kinds:
        feats.add("self-interference")
    return feats


def ranked_strategies(spec: ProblemSpec) -> list[StrategyId]:
    """Ranked strategy ids for ``spec`` from the decision table."""
    feats = spec_features(spec)
    obj, arch = ObjectiveKind(spec.objective.kind), Architecture(spec.architecture)
    for row_obj, row_arch, feat, ranked in DECISION_TABLE:
        if row_obj is obj and row_arch is arch and feat in feats:
            return list(ranked)
    raise NoApplicableStrategy(f"no strategy for {obj.value} on {arch.value}")


def check_spec_against(spec: ProblemSpec, theta) -> None:
    """Raise SchemaViolation when ``spec`` does not describe ``theta``."""
    if ObjectiveKind(spec.objective.kind) is not ObjectiveKind(theta.obj):
        raise SchemaViolation("objective kind does not match the scenario")
    if Architecture(spec.architecture) is not Architecture(theta.sys.architecture):
        raise SchemaViolation("architecture does not match the scenario")
    if len(spec.constraints) != len(theta.con):
        raise SchemaViolation(f"expected {len(theta.con)} constraints, got {len(spec.constraints)}")
    for ref in spec.constraints:
        if ConstraintKind(ref.kind) is not ConstraintKind(theta.con[ref.index].kind):
            raise SchemaViolation(f"constraint {ref.index} kind mismatch")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class RuleBackend:
    """Table-driven stage implementations; every stage is a pure function."""

    name = "rule"

    def formulate(self, D, theta) -> ProblemSpec:
        arch = Architecture(theta.sys.architecture)
        refs = [ConstraintRef(index=i, kind=c.kind, params=dict(c.params),
                              convex=constraint_convex(c.kind, arch), coupling=COUPLING[c.kind])
                for i, c in enumerate(theta.con)]
        obj = ObjectiveKind(theta.obj)
        nonconvex = sorted({r.kind.value for r in refs if not r.convex})
        notes = (f"{obj.value} over a {arch.value} transmitter with {theta.sys.N_t} antennas and "
                 f"{theta.sys.K} users. ")
        notes += (f"Nonconvex constraints: {', '.join(nonconvex)}." if nonconvex
                  else "All constraints are convex after reformulation.")
        return ProblemSpec(architecture=arch, variables=_variables(theta),
                           objective=Objective(kind=obj, direction=obj.direction,
                                               expression_id=METRIC_OF[obj]),
                           constraints=refs, notes=notes)

    def select_strategy(self, spec: ProblemSpec) -> SolverStrategy:
        return registry_lookup(ranked_strategies(spec)[0]).strategy()

    def upsample(self, theta, spec: ProblemSpec, strategy: SolverStrategy,
                 tol: float = 1e-6) -> ImplementationPrompt:
        sid = StrategyId(strategy.strategy_id)
        handle = registry_lookup(sid)
        variables = "\n".join(f"- {v.name}: {v.domain} of shape {v.shape}" for v in spec.variables)
        variables += f"\narchitecture: {spec.architecture.value}"
        objective = (f"{spec.objective.direction} {spec.objective.expression_id} "
                     f"({spec.objective.kind.value})")
        constraints = "\n".join(
            f"{c.index}. {c.kind.value} "
            + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(c.params.items()))
            + f" [{'convex' if c.convex else 'nonconvex'}, {c.coupling}]"
            for c in spec.constraints) or "none"
        steps = f"strategy: {sid.value}\n{handle.summary}\n" + "\n".join(
            f"{i + 1}. {s}" for i, s in enumerate(STEPS[sid]))
        hp = strategy.hyperparams.model_dump()
        numerics = "\n".join(f"{k} = {v}" for k, v in hp.items())
        io = (f"input: scenario {theta.sys.scenario_id} descriptor (N_t={theta.sys.N_t}, "
              f"K={theta.sys.K}, snr_db={theta.snr_db})\n"
              f"output: {', '.join(v.domain for v in spec.variables)} as JSON real/imag pairs")
        checks = "\n".join(
            f"{c.index}. {c.kind.value}: violation max(0, lhs - rhs) <= {tol:g} x max(1, |bound|)"
            for c in spec.constraints) or "none"
        bodies = [variables, objective, constraints, steps, numerics, io, checks]
        return ImplementationPrompt(sections=[PromptSection(heading=h, body=b)
                                              for h, b in zip(SECTION_HEADINGS, bodies)])

    def generate_plan(self, prompt: ImplementationPrompt) -> SolverPlan:
        m = re.search(r"^strategy:\s*(\S+)", prompt.section("Algorithmic steps"), re.M)
        if m is None:
            raise SchemaViolation("prompt names no strategy")
        sid = StrategyId(m.group(1))
        handle = registry_lookup(sid)
        pre = list(PREPROCESSING.get(sid, []))
        return SolverPlan(strategy=handle.strategy(), preprocessing=pre, postprocessing=[],
                          rendered_source=render_source(sid, handle.defaults.model_dump(), pre, []),
                          revision=0)


def render_source(sid: StrategyId, hyperparams: dict, pre: list, post: list) -> str:
    """Human-readable pseudocode of a plan; audit output, never executed."""
    lines = [f"# plan for {StrategyId(sid).value}",
             f"params = {json.dumps(hyperparams, sort_keys=True)}"]
    lines += [f"init <- {step}" for step in pre]
    lines += [f"step {i + 1}: {s}" for i, s in enumerate(STEPS[StrategyId(sid)])]
    lines += [f"post <- {step}" for step in post]
    lines.append("return solution, feasibility report")
    return "\n".join(lines)
