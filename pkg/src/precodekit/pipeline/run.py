"""The staged pipeline driver: formulate, select, upsample, generate, then
execute and refine until accepted or out of budget."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..errors import (BackendFailure, NoApplicableStrategy, NoFurtherRefinement,
                      PrecodingError, SchemaViolation)
from ..model import solution_to_dict
from ..solvers.base import StrategyId
from .execute import DEFAULT_TIME_CAP, FEASIBILITY_TOL, execute_and_evaluate, refine
from .rules import RuleBackend, ranked_strategies, render_source
from .steps import BaselineCache
from .transcript import Transcript
from .types import Feedback, PipelineResult, SolverPlan


class PipelineConfig(BaseModel):
    """Run settings. ``fault`` injects a failure into the initial plan."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    backend: Literal["rule", "remote"] = "rule"
    T_max: int = Field(5, ge=1)
    objective_quality_check: bool = True
    time_cap_s: float = Field(DEFAULT_TIME_CAP, gt=0)
    feasibility_tol: float = Field(FEASIBILITY_TOL, gt=0)
    fault: Optional[Literal["max_iter_1", "overdrive"]] = None
    transcript_dir: Optional[str] = None


def assess_quality(feedback: Feedback, theta, cache: BaselineCache) -> Feedback:
    """Mark an Ok feedback whose objective trails the best feasible baseline
    by more than 1e-6 (relative)."""
    best = cache.best_value()
    if best is None or feedback.objective is None:
        return feedback.model_copy(update={"quality": "ok"})
    slack = 1e-6 * max(abs(best), 1e-12)
    if theta.obj.direction == "min":
        worse = feedback.objective > best + slack
    else:
        worse = feedback.objective < best - slack
    return feedback.model_copy(update={"quality": "below_baseline" if worse else "ok"})


def _inject_fault(plan: SolverPlan, fault: str | None) -> SolverPlan:
    if fault is None:
        return plan
    if fault == "max_iter_1":
        hp = plan.strategy.hyperparams.model_copy(update={"max_iter": 1})
        strategy = plan.strategy.model_copy(update={"hyperparams": hp})
        return plan.model_copy(update={"strategy": strategy})
    post = list(plan.postprocessing) + ["fault:overdrive"]
    return plan.model_copy(update={
        "postprocessing": post,
        "rendered_source": render_source(plan.strategy.strategy_id,
                                         plan.strategy.hyperparams.model_dump(),
                                         plan.preprocessing, post)})


def _feedback_record(revision: int, fb: Feedback) -> dict:
    return {"revision": revision, "feedback": fb.comparable()}


def run_pipeline(D, theta, config: PipelineConfig | dict | None = None, *, backend=None,
                 cache: BaselineCache | None = None,
                 transcript: Transcript | None = None) -> PipelineResult:
    """Run the full pipeline on one instance; never raises.

    ``backend`` defaults to the rule backend. ``cache`` may carry precomputed
    baseline solutions of ``theta`` (used for warm starts and the quality
    check). With ``config.transcript_dir`` set, a transcript file named by a
    fresh run id is written there.
    """
    config = PipelineConfig.model_validate(config or {})
    backend = backend or RuleBackend()
    cache = cache or BaselineCache(theta)
    if transcript is None:
        transcript = (Transcript.in_directory(config.transcript_dir)
                      if config.transcript_dir else Transcript())
    result = PipelineResult(spec=None)
    result.transcript_path = str(transcript.path) if transcript.path else None
    rule = RuleBackend()
    tol = config.feasibility_tol

    transcript.append("stage_input", "formulate", {
        "task": D.text, "scenario_id": theta.sys.scenario_id, "snr_db": theta.snr_db,
        "seed": theta.seed, "backend": getattr(backend, "name", "custom"),
        "config": config.model_dump(mode="json", exclude={"transcript_dir"})})
    try:
        spec = backend.formulate(D, theta)
        result.spec = spec
        transcript.append("stage_output", "formulate", spec.model_dump(mode="json"))
        transcript.append("stage_input", "select", {"from": "formulate"})
        strategy = backend.select_strategy(spec)
        result.strategy_history.append(strategy)
        transcript.append("stage_output", "select", strategy.model_dump(mode="json"))
        transcript.append("stage_input", "upsample", {"from": ["formulate", "select"]})
        prompt = backend.upsample(theta, spec, strategy, tol)
        transcript.append("stage_output", "upsample", prompt.model_dump(mode="json"))
        transcript.append("stage_input", "generate", {"from": "upsample"})
        try:
            plan = backend.generate_plan(prompt)
        except SchemaViolation as exc:
            result.warnings.append(f"generate: fell back to rule backend ({exc})")
            plan = rule.generate_plan(prompt)
        result.warnings.extend(getattr(backend, "warnings", []))
        try:
            ranked = ranked_strategies(spec)
        except NoApplicableStrategy:
            ranked = []
        sid = StrategyId(plan.strategy.strategy_id)
        plan = plan.model_copy(update={"alternatives": [s for s in ranked if s is not sid]})
        plan = _inject_fault(plan, config.fault)
        transcript.append("stage_output", "generate", plan.model_dump(mode="json"))
    except (BackendFailure, SchemaViolation, NoApplicableStrategy, PrecodingError, ValueError) as exc:
        result.warnings.append(f"{type(exc).__name__}: {exc}")
        result.terminated_by = "Unrecoverable"
        _finish(result, transcript)
        return result

    best = None                                     # (objective, solution)
    for t in range(config.T_max + 1):
        solution, fb = execute_and_evaluate(plan, theta, cache=cache, time_cap=config.time_cap_s,
                                            tol=tol)
        if fb.status == "Ok" and config.objective_quality_check:
            fb = assess_quality(fb, theta, cache)
        result.plans.append(plan)
        result.feedbacks.append(fb)
        transcript.append("feedback", "execute", _feedback_record(plan.revision, fb))
        if fb.status == "Ok":
            better = (best is None or fb.objective is None or
                      (fb.objective < best[0] if theta.obj.direction == "min"
                       else fb.objective > best[0]))
            if better:
                best = (fb.objective, solution)
            if fb.quality != "below_baseline":
                best = (fb.objective, solution)
                result.terminated_by = "Accepted"
                break
        if t == config.T_max:
            result.terminated_by = "Accepted" if fb.status == "Ok" else "MaxRefinements"
            break
        try:
            plan = refine(plan, fb)
        except NoFurtherRefinement as exc:
            result.warnings.append(str(exc))
            result.terminated_by = "Accepted" if fb.status == "Ok" else "Unrecoverable"
            break
        if plan.strategy.strategy_id != result.strategy_history[-1].strategy_id:
            result.strategy_history.append(plan.strategy)
        transcript.append("refinement", "refine", {"revision": plan.revision,
                                                   "plan": plan.model_dump(mode="json")})

    if result.terminated_by == "Accepted" and best is not None:
        result.final_objective, result.final_solution = best
        if result.feedbacks[-1].quality == "below_baseline":
            result.warnings.append("accepted below the best baseline; strategies exhausted")
    _finish(result, transcript)
    return result


def _finish(result: PipelineResult, transcript: Transcript) -> None:
    transcript.append("stage_output", "result", {
        "terminated_by": result.terminated_by,
        "final_objective": result.final_objective,
        "final_solution": (solution_to_dict(result.final_solution)
                           if result.final_solution is not None else None),
        "warnings": list(result.warnings),
    })


def replay(path: str | Path, reexecute: bool = False):
    """Rebuild a recorded run; with ``reexecute`` also re-run every plan and
    return the fresh feedbacks alongside.

    Returns ``(result, fresh_feedbacks or None)``; raises CorruptTranscript.
    """
    from ..scenarios import instantiate_scenario
    from .transcript import read_records, result_from_records

    result, ctx = result_from_records(read_records(path))
    if not reexecute:
        return result, None
    config = PipelineConfig.model_validate(ctx["config"])
    _, theta = instantiate_scenario(ctx["scenario_id"], ctx["snr_db"], ctx["seed"])
    cache = BaselineCache(theta)
    fresh = []
    for plan in result.plans:
        _, fb = execute_and_evaluate(plan, theta, cache=cache, time_cap=config.time_cap_s,
                                     tol=config.feasibility_tol)
        if fb.status == "Ok" and config.objective_quality_check:
            fb = assess_quality(fb, theta, cache)
        fresh.append(fb)
    return result, fresh
