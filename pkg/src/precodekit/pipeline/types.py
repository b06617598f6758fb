"""Strict stage schemas of the solver-generation pipeline.

Every stage output is a pydantic model that rejects unknown fields, so a
drifting remote backend surfaces as a validation error instead of a silent
behavior change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..model import Architecture, ConstraintKind, ObjectiveKind, Solution
from ..solvers.base import SolverStrategy, StrategyId

SECTION_HEADINGS = (
    "Variables",
    "Objective",
    "Constraints",
    "Algorithmic steps",
    "Numerical settings",
    "Input-output format",
    "Feasibility checks",
)

MetricId = Literal["total_power", "normalized_margin", "secrecy_rate", "sum_rate"]
DomainTag = Literal["BeamformerMatrix", "PhaseVector", "QuantizedVector", "AnalogPrecoder",
                    "DigitalPrecoder"]
Coupling = Literal["per_user", "per_antenna", "joint"]
PreStep = Literal["mrt-composite-init", "zf-ce-init", "baseline-warm-start", "multi-start-init"]
PostStep = Literal["power-rescale", "fault:overdrive"]
Status = Literal["Ok", "ValidationError", "RuntimeError", "NotConverged", "Infeasible"]
Termination = Literal["Accepted", "MaxRefinements", "Unrecoverable"]

# solution variables each architecture must expose
ARCHITECTURE_DOMAINS: dict[Architecture, tuple[str, ...]] = {
    Architecture.FULLY_DIGITAL: ("BeamformerMatrix",),
    Architecture.CONSTANT_ENVELOPE: ("PhaseVector",),
    Architecture.ONE_BIT: ("QuantizedVector",),
    Architecture.HYBRID: ("AnalogPrecoder", "DigitalPrecoder"),
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Variable(_Strict):
    name: str = Field(min_length=1)
    shape: list[int] = Field(min_length=1)
    domain: DomainTag


class Objective(_Strict):
    kind: ObjectiveKind
    direction: Literal["min", "max"]
    expression_id: MetricId

    @model_validator(mode="after")
    def _direction_matches(self):
        if self.direction != ObjectiveKind(self.kind).direction:
            raise ValueError(f"{self.kind.value} is a {self.kind.direction} objective")
        return self


class ConstraintRef(_Strict):
    index: int = Field(ge=0)
    kind: ConstraintKind
    params: dict[str, float]
    convex: bool
    coupling: Coupling


class ProblemSpec(_Strict):
    """Structured problem specification produced by the formulation stage."""

    architecture: Architecture
    variables: list[Variable] = Field(min_length=1)
    objective: Objective
    constraints: list[ConstraintRef]
    notes: str = ""

    @model_validator(mode="after")
    def _consistent(self):
        indices = [c.index for c in self.constraints]
        if sorted(indices) != list(range(len(indices))):
            raise ValueError("constraint indices must be 0..n-1, each exactly once")
        have = {v.domain for v in self.variables}
        missing = set(ARCHITECTURE_DOMAINS[Architecture(self.architecture)]) - have
        if missing:
            raise ValueError(f"variables do not cover {self.architecture.value}: "
                             f"missing {sorted(missing)}")
        return self


class PromptSection(_Strict):
    heading: str
    body: str = Field(min_length=1)

    @field_validator("body")
    @classmethod
    def _non_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("section body must be non-empty")
        return v


class ImplementationPrompt(_Strict):
    """Implementation-oriented prompt with the seven fixed sections."""

    sections: list[PromptSection]

    @model_validator(mode="after")
    def _headings(self):
        got = tuple(s.heading for s in self.sections)
        if got != SECTION_HEADINGS:
            raise ValueError(f"section headings must be exactly {list(SECTION_HEADINGS)}, got "
                             f"{list(got)}")
        return self

    def section(self, heading: str) -> str:
        for s in self.sections:
            if s.heading == heading:
                return s.body
        raise KeyError(heading)


class SolverPlan(_Strict):
    """Validated, executable stand-in for generated solver code.

    ``rendered_source`` is audit text only; execution reads nothing but the
    typed fields. ``alternatives`` carries the remaining ranked strategies
    for refinement.
    """

    strategy: SolverStrategy
    preprocessing: list[PreStep] = Field(default_factory=list)
    postprocessing: list[PostStep] = Field(default_factory=list)
    rendered_source: Optional[str] = None
    revision: int = Field(0, ge=0)
    alternatives: list[StrategyId] = Field(default_factory=list)

    @field_validator("strategy")
    @classmethod
    def _registered(cls, v: SolverStrategy) -> SolverStrategy:
        from ..solvers.registry import registry_lookup
        registry_lookup(v.strategy_id)
        return v

    @field_validator("alternatives")
    @classmethod
    def _alternatives_registered(cls, v):
        from ..solvers.registry import registry_lookup
        for s in v:
            registry_lookup(s)
        return v


class ViolationRecord(_Strict):
    constraint_index: int = Field(ge=0)
    kind: ConstraintKind
    magnitude: float = Field(ge=0)


class Feedback(_Strict):
    """Execution feedback of one plan revision.

    ``quality`` is set by the run loop: ``below_baseline`` marks a feasible
    result that is worse than the best feasible registered baseline.
    """

    status: Status
    violations: list[ViolationRecord] = Field(default_factory=list)
    objective: Optional[float] = None
    iterations: Optional[int] = None
    warnings: list[str] = Field(default_factory=list)
    wall_time: float = Field(0.0, ge=0)
    quality: Literal["unchecked", "ok", "below_baseline"] = "unchecked"

    @field_validator("objective")
    @classmethod
    def _finite(cls, v):
        if v is not None and not math.isfinite(v):
            raise ValueError("objective must be finite")
        return v

    @model_validator(mode="after")
    def _ok_is_feasible(self):
        if self.status == "Ok" and self.violations:
            raise ValueError("status Ok with constraint violations")
        return self

    def comparable(self) -> dict:
        """Content excluding wall time, for determinism checks."""
        return self.model_dump(mode="json", exclude={"wall_time"})


@dataclass
class PipelineResult:
    spec: Optional[ProblemSpec]
    strategy_history: list[SolverStrategy] = field(default_factory=list)
    plans: list[SolverPlan] = field(default_factory=list)
    feedbacks: list[Feedback] = field(default_factory=list)
    final_solution: Optional[Solution] = None
    terminated_by: Termination = "Unrecoverable"
    final_objective: Optional[float] = None
    warnings: list[str] = field(default_factory=list)
    transcript_path: Optional[str] = None

    def check_invariants(self) -> None:
        """Raise ValueError when the recorded run is inconsistent."""
        if len(self.plans) != len(self.feedbacks):
            raise ValueError("plans and feedbacks are not aligned")
        if [p.revision for p in self.plans] != list(range(len(self.plans))):
            raise ValueError("plan revisions are not consecutive from 0")
        if self.terminated_by == "Accepted":
            if not self.feedbacks or self.feedbacks[-1].status != "Ok":
                raise ValueError("Accepted run must end with status Ok")
            if any(v.magnitude > 0 for v in self.feedbacks[-1].violations):
                raise ValueError("Accepted run ends with violations")


STAGE_MODELS = {
    "formulate": ProblemSpec,
    "select": SolverStrategy,
    "upsample": ImplementationPrompt,
    "generate": SolverPlan,
}


def stage_schemas() -> dict[str, dict]:
    """JSON schema of every stage output, keyed by model name."""
    return {m.__name__: m.model_json_schema() for m in STAGE_MODELS.values()}


def export_schemas(directory) -> list:
    """Write ``<Model>.schema.json`` files; returns the paths."""
    import json
    from pathlib import Path
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, schema in stage_schemas().items():
        path = out / f"{name}.schema.json"
        path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
        paths.append(path)
    return paths
