"""Append-only JSON-Lines run transcripts and their replay."""

from __future__ import annotations

import datetime as _dt
import json
import secrets
from pathlib import Path

from pydantic import ValidationError

from ..errors import CorruptTranscript
from ..model import solution_from_dict
from ..solvers.base import SolverStrategy
from .types import Feedback, PipelineResult, ProblemSpec, SolverPlan

LINE_TYPES = ("stage_input", "stage_output", "feedback", "refinement")


def new_run_id() -> str:
    """UTC timestamp plus a 6-character random suffix."""
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    return f"{stamp}-{secrets.token_hex(3)}"


class Transcript:
    """Append-only record of one pipeline run.

    Records hold no wall-clock data, so identical runs produce identical
    files. With ``path`` None the records stay in memory.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    @classmethod
    def in_directory(cls, directory: str | Path, run_id: str | None = None) -> "Transcript":
        run_id = run_id or new_run_id()
        t = cls(Path(directory) / f"{run_id}.jsonl")
        t.run_id = run_id
        return t

    def append(self, line_type: str, stage: str, data) -> None:
        if line_type not in LINE_TYPES:
            raise ValueError(f"unknown line type {line_type!r}")
        record = {"type": line_type, "stage": stage, "data": data}
        self.records.append(record)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(json.dumps(record, sort_keys=True, allow_nan=False) + "\n")


def read_records(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CorruptTranscript(f"cannot read {path}: {exc}") from None
    if text and not text.endswith("\n"):
        raise CorruptTranscript("transcript is truncated (last line incomplete)")
    records = []
    for n, line in enumerate(text.splitlines(), 1):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptTranscript(f"line {n}: {exc}") from None
        if not isinstance(rec, dict) or rec.get("type") not in LINE_TYPES:
            raise CorruptTranscript(f"line {n}: unknown record")
        records.append(rec)
    return records


def result_from_records(records: list[dict]) -> tuple[PipelineResult, dict]:
    """Rebuild the PipelineResult of a recorded run and return it with the
    recorded run context (scenario, SNR, seed, config)."""
    context, result = None, None
    spec, plans, feedbacks, history = None, [], [], []
    try:
        for rec in records:
            kind, stage, data = rec["type"], rec["stage"], rec["data"]
            if kind == "stage_input" and stage == "formulate":
                context = data
            elif kind == "stage_output" and stage == "formulate":
                spec = ProblemSpec.model_validate(data)
            elif kind == "stage_output" and stage == "select":
                history.append(SolverStrategy.model_validate(data))
            elif kind == "stage_output" and stage == "generate":
                plans.append(SolverPlan.model_validate(data))
            elif kind == "refinement":
                plans.append(SolverPlan.model_validate(data["plan"]))
            elif kind == "feedback":
                feedbacks.append(Feedback.model_validate(data["feedback"]))
            elif kind == "stage_output" and stage == "result":
                result = data
    except (KeyError, TypeError, ValidationError) as exc:
        raise CorruptTranscript(f"malformed record: {exc}") from None
    if context is None or result is None:
        raise CorruptTranscript("transcript is incomplete (missing run context or result)")
    for plan in plans[1:]:
        if not history or plan.strategy.strategy_id != history[-1].strategy_id:
            history.append(plan.strategy)
    sol = result.get("final_solution")
    out = PipelineResult(spec=spec, strategy_history=history, plans=plans, feedbacks=feedbacks,
                         final_solution=solution_from_dict(sol) if sol else None,
                         terminated_by=result["terminated_by"],
                         final_objective=result.get("final_objective"),
                         warnings=list(result.get("warnings", [])))
    try:
        out.check_invariants()
    except ValueError as exc:
        raise CorruptTranscript(str(exc)) from None
    return out, context
