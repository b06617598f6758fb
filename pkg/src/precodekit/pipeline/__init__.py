"""Staged solver-generation pipeline with execution feedback and
refinement, over a rule backend and a remote model backend."""

from .execute import execute_and_evaluate, refine
from .remote import RemoteBackend, RemoteClient, RemoteConfig, llm_complete
from .rules import DECISION_TABLE, RuleBackend, ranked_strategies
from .run import PipelineConfig, replay, run_pipeline
from .steps import BaselineCache
from .transcript import Transcript, new_run_id
from .types import (SECTION_HEADINGS, Feedback, ImplementationPrompt, PipelineResult,
                    ProblemSpec, SolverPlan)


def _backend(backend):
    return backend or RuleBackend()


def formulate(D, theta, backend=None) -> ProblemSpec:
    return _backend(backend).formulate(D, theta)


def select_strategy(spec, backend=None):
    return _backend(backend).select_strategy(spec)


def upsample(theta, spec, strategy, backend=None) -> ImplementationPrompt:
    return _backend(backend).upsample(theta, spec, strategy)


def generate_plan(prompt, backend=None) -> SolverPlan:
    return _backend(backend).generate_plan(prompt)


__all__ = [
    "BaselineCache", "DECISION_TABLE", "Feedback", "ImplementationPrompt", "PipelineConfig",
    "PipelineResult", "ProblemSpec", "RemoteBackend", "RemoteClient", "RemoteConfig",
    "RuleBackend", "SECTION_HEADINGS", "SolverPlan", "Transcript", "execute_and_evaluate",
    "formulate", "generate_plan", "llm_complete", "new_run_id", "ranked_strategies", "refine",
    "replay", "run_pipeline", "select_strategy", "upsample",
]
