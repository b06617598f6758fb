"""Plan execution with feedback, and the rule-table refinement operator."""

from __future__ import annotations

import concurrent.futures as cf
import math
import time

from ..errors import (ArchitectureMismatch, Infeasible, NoFurtherRefinement, NotConverged,
                      UnknownStrategy)
from ..model import ConstraintKind
from ..solvers.base import SolverStrategy, StrategyId
from ..solvers.registry import registry_lookup
from .rules import METRIC_OF, PREPROCESSING, render_source
from .steps import BaselineCache, apply_postprocessing, build_init
from .types import Feedback, SolverPlan, ViolationRecord

DEFAULT_TIME_CAP = 60.0
FEASIBILITY_TOL = 1e-6


def _evaluate(solution, theta, tol):
    from ..harness.evaluation import compute_metrics, feasibility_check
    violations = [ViolationRecord(constraint_index=v.index, kind=v.kind, magnitude=v.magnitude)
                  for v in feasibility_check(solution, theta, tol)]
    objective = compute_metrics(solution, theta).value(METRIC_OF[theta.obj])
    return violations, (objective if math.isfinite(objective) else None)


def execute_and_evaluate(plan: SolverPlan, theta, *, cache: BaselineCache | None = None,
                         time_cap: float = DEFAULT_TIME_CAP, tol: float = FEASIBILITY_TOL):
    """Run the registry solver named by ``plan`` on ``theta``.

    Never raises: every failure is encoded in the returned ``Feedback``.
    Returns ``(solution or None, feedback)``.
    """
    t0 = time.perf_counter()
    warnings: list[str] = []

    def done(status, solution=None, violations=(), objective=None, iterations=None):
        return solution, Feedback(status=status, violations=list(violations), objective=objective,
                                  iterations=iterations, warnings=warnings,
                                  wall_time=time.perf_counter() - t0)

    sid = plan.strategy.strategy_id
    try:
        handle = registry_lookup(sid)
        handle.check(theta)
    except (UnknownStrategy, ArchitectureMismatch) as exc:
        warnings.append(f"{type(exc).__name__}: {exc}")
        return done("ValidationError")

    status = "Ok"
    outcome = None
    pool = cf.ThreadPoolExecutor(max_workers=1)
    try:
        init, w = build_init(plan, theta, cache)
        warnings.extend(w)
        future = pool.submit(handle.solve, theta, plan.strategy.hyperparams, init)
        outcome = future.result(timeout=time_cap)
    except cf.TimeoutError:
        warnings.append(f"RuntimeError: wall-time cap of {time_cap:g} s exceeded")
        return done("RuntimeError")
    except NotConverged as exc:
        warnings.append(f"NotConverged: {exc}")
        status, outcome = "NotConverged", exc.outcome
    except Infeasible as exc:
        warnings.append(f"Infeasible: {exc}")
        return done("Infeasible")
    except Exception as exc:        # solver crash is a status, not an escape
        warnings.append(f"RuntimeError: {type(exc).__name__}: {exc}")
        return done("RuntimeError")
    finally:
        pool.shutdown(wait=False)
    if outcome is None:
        return done(status)

    try:
        solution, w = apply_postprocessing(outcome.solution, theta, plan.postprocessing)
        warnings.extend(w)
        violations, objective = _evaluate(solution, theta, tol)
    except Exception as exc:
        warnings.append(f"RuntimeError: {type(exc).__name__}: {exc}")
        return done("RuntimeError", iterations=outcome.iterations)
    if status == "Ok" and violations:
        status = "Infeasible"
    return done(status, solution, violations, objective, outcome.iterations)


def _next_strategy(plan: SolverPlan, revision: int) -> SolverPlan:
    if not plan.alternatives:
        raise NoFurtherRefinement(
            f"no strategy left after {StrategyId(plan.strategy.strategy_id).value}")
    nxt, rest = plan.alternatives[0], list(plan.alternatives[1:])
    handle = registry_lookup(nxt)
    pre = list(PREPROCESSING.get(StrategyId(nxt), []))
    post = [s for s in plan.postprocessing if s.startswith("fault:")]
    return SolverPlan(strategy=handle.strategy(), preprocessing=pre, postprocessing=post,
                      rendered_source=render_source(nxt, handle.defaults.model_dump(), pre, post),
                      revision=revision, alternatives=rest)


def _patched(plan: SolverPlan, revision: int, *, hp: dict | None = None,
             pre: list | None = None, post: list | None = None) -> SolverPlan:
    hyper = plan.strategy.hyperparams.model_copy(update=hp or {})
    hyper = type(hyper).model_validate(hyper.model_dump())
    strategy = SolverStrategy(strategy_id=plan.strategy.strategy_id, hyperparams=hyper)
    pre = list(plan.preprocessing if pre is None else pre)
    post = list(plan.postprocessing if post is None else post)
    return SolverPlan(strategy=strategy, preprocessing=pre, postprocessing=post,
                      rendered_source=render_source(strategy.strategy_id, hyper.model_dump(), pre,
                                                    post),
                      revision=revision, alternatives=list(plan.alternatives))


def refine(plan: SolverPlan, feedback: Feedback) -> SolverPlan:
    """Rule-table refinement of ``plan`` given its ``feedback``.

    Raises ``NoFurtherRefinement`` when a strategy switch is needed and the
    ranked list is exhausted.
    """
    rev = plan.revision + 1
    hp = plan.strategy.hyperparams
    if feedback.status == "Ok":
        if feedback.quality == "below_baseline":
            return _next_strategy(plan, rev)
        raise ValueError("refine needs a failed or below-baseline feedback")
    if feedback.status in ("ValidationError", "RuntimeError"):
        return _next_strategy(plan, rev)
    if feedback.status == "NotConverged":
        return _patched(plan, rev, hp={"max_iter": min(hp.max_iter * 4, 100_000),
                                       "tol": min(hp.tol * 10, 1.0)})
    if not feedback.violations:         # solver declared the instance infeasible
        return _next_strategy(plan, rev)

    kinds = {ConstraintKind(v.kind) for v in feedback.violations}
    worst = max(v.magnitude for v in feedback.violations)
    if ConstraintKind.TOTAL_POWER in kinds and "power-rescale" not in plan.postprocessing:
        return _patched(plan, rev, post=list(plan.postprocessing) + ["power-rescale"])
    if kinds & {ConstraintKind.PER_USER_RATE, ConstraintKind.PER_USER_SINR}:
        return _patched(plan, rev, hp={"target_scale": min(hp.target_scale * (1 + worst), 10.0)})
    if (ConstraintKind.CI_MARGIN in kinds
            and StrategyId(plan.strategy.strategy_id) is StrategyId.ONE_BIT_GREEDY_CD):
        if "multi-start-init" not in plan.preprocessing:
            return _patched(plan, rev, pre=list(plan.preprocessing) + ["multi-start-init"])
        return _patched(plan, rev, hp={"grid_points": min(hp.grid_points * 4, 4096)})
    return _patched(plan, rev, hp={"penalty": hp.penalty * 10})

