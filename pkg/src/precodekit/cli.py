"""Command-line front end.

Commands: ``scenario list``, ``run``, ``sweep``, ``replay``. Exit codes:
0 success, 2 usage or unknown entity, 3 configuration, 4 infeasible or
unrecoverable. Failures print one JSON line ``{"error": ..., "message": ...}``
on stderr.

The config file holds flat dotted keys, one ``key = value`` per line
(``#`` starts a comment). Environment variables ``PRECODEKIT_<KEY>`` (dots
as underscores, upper case) override file values; the remote API key is
read from ``AGENTIC_LLM_API_KEY`` only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, CorruptTranscript, UnknownScenario, UnknownStrategy

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3, 4
ENV_PREFIX = "PRECODEKIT_"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LlmSettings(_Section):
    base_url: Optional[str] = None
    model: Optional[str] = None
    path: str = "/v1/chat/completions"
    timeout_s: float = Field(60.0, gt=0)
    max_inflight: int = Field(4, ge=1)


class SweepSettings(_Section):
    n_mc: int = Field(100, ge=1)
    seed: int = 0
    snrs_db: list[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])
    scenarios: list[int] = Field(default_factory=lambda: list(range(1, 10)))
    methods: Optional[list[str]] = None


class PathSettings(_Section):
    transcript_dir: str = "transcripts"
    report_dir: str = "reports"
    catalog: Optional[str] = None


class ToleranceSettings(_Section):
    feasibility_tol: float = Field(1e-6, gt=0)


class PipelineSettings(_Section):
    T_max: int = Field(5, ge=1)
    objective_quality_check: bool = True
    time_cap_s: float = Field(60.0, gt=0)


class RunConfig(_Section):
    backend: Literal["rule", "remote"] = "rule"
    llm: LlmSettings = Field(default_factory=LlmSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    paths: PathSettings = Field(default_factory=PathSettings)
    tolerances: ToleranceSettings = Field(default_factory=ToleranceSettings)
    pipeline: PipelineSettings = Field(default_factory=PipelineSettings)

    @model_validator(mode="after")
    def _remote_complete(self):
        if self.backend == "remote" and not (self.llm.base_url and self.llm.model):
            raise ValueError("remote backend requires llm.base_url and llm.model")
        return self

    def flat(self) -> dict[str, object]:
        out = {}
        for section, values in self.model_dump().items():
            if isinstance(values, dict):
                out.update({f"{section}.{k}": v for k, v in values.items()})
            else:
                out[section] = values
        return out


_LIST_KEYS = {"sweep.snrs_db", "sweep.scenarios", "sweep.methods"}


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def load_config(path: str | Path | None = None, env=None) -> RunConfig:
    """Config from an optional file plus ``PRECODEKIT_*`` overrides."""
    env = os.environ if env is None else env
    flat: dict[str, str] = {}
    if path is not None:
        try:
            flat.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    known = RunConfig().flat()
    for key in known:
        env_key = ENV_PREFIX + key.replace(".", "_").upper()
        if env_key in env:
            flat[key] = env[env_key]
    nested: dict[str, dict | str] = {}
    for key, value in flat.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key in _LIST_KEYS:
            value = [v.strip() for v in value.split(",") if v.strip()]
        if "." in key:
            section, name = key.split(".", 1)
            nested.setdefault(section, {})[name] = value
        else:
            nested[key] = value
    try:
        return RunConfig.model_validate(nested)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def _error(name: str, message: str, code: int) -> int:
    print(json.dumps({"error": name, "message": message}), file=sys.stderr)
    return code


def _remote_backend(config: RunConfig, transport=None):
    from .pipeline.remote import RemoteBackend, RemoteClient, RemoteConfig
    settings = {f"llm.{k}": v for k, v in config.llm.model_dump().items() if v is not None}
    remote = RemoteConfig.from_settings(settings)
    return RemoteBackend(RemoteClient(remote, transport))


def cmd_scenario_list(args, config: RunConfig) -> int:
    from .scenarios import load_catalog
    catalog = load_catalog(args.catalog or config.paths.catalog)
    print(f"{'id':>3}  {'name':<40} {'objective':<14} {'metric':<18} architecture")
    for sid in catalog.ids():
        e = catalog.entry(sid)
        print(f"{sid:>3}  {e['name']:<40} {e['objective']:<14} {e['metric']:<18} "
              f"{e['architecture']}")
    return EXIT_OK


def cmd_run(args, config: RunConfig, transport=None) -> int:
    from .harness.evaluation import compute_metrics, feasibility_check
    from .model import solution_to_dict
    from .pipeline.run import PipelineConfig, run_pipeline
    from .pipeline.steps import BaselineCache
    from .scenarios import instantiate_scenario, load_catalog
    from .solvers.registry import registered_ids, solve_default

    catalog = load_catalog(args.catalog or config.paths.catalog)
    D, theta = instantiate_scenario(args.scenario, args.snr, args.seed, catalog)
    entry = catalog.entry(args.scenario)
    method = args.method
    summary = {"scenario_id": theta.sys.scenario_id, "snr_db": args.snr, "seed": args.seed,
               "method": method}
    solution = None
    if method == "pipeline":
        backend = _remote_backend(config, transport) if config.backend == "remote" else None
        pconf = PipelineConfig(backend=config.backend, T_max=config.pipeline.T_max,
                               objective_quality_check=config.pipeline.objective_quality_check,
                               time_cap_s=config.pipeline.time_cap_s,
                               feasibility_tol=config.tolerances.feasibility_tol,
                               transcript_dir=config.paths.transcript_dir)
        res = run_pipeline(D, theta, pconf, backend=backend)
        summary.update(terminated_by=res.terminated_by, revisions=len(res.plans) - 1,
                       transcript=res.transcript_path, warnings=res.warnings)
        solution = res.final_solution
    elif method in {s.value for s in registered_ids()}:
        from .errors import NotConverged, PrecodingError
        try:
            solution = solve_default(method, theta).solution
        except NotConverged as exc:
            solution = exc.outcome.solution
        except PrecodingError as exc:
            summary["warnings"] = [f"{type(exc).__name__}: {exc}"]
    elif method in entry["baselines"]:
        solution = BaselineCache(theta).solution(method)
    else:
        raise UnknownStrategy(f"{method!r} is neither a baseline of scenario {args.scenario}, "
                              "a registered strategy nor 'pipeline'")

    feasible = False
    if solution is not None:
        violations = feasibility_check(solution, theta, config.tolerances.feasibility_tol)
        feasible = not violations
        summary["objective"] = compute_metrics(solution, theta).value(entry["metric"])
        summary["violations"] = [{"index": v.index, "kind": v.kind, "magnitude": v.magnitude}
                                 for v in violations]
    summary["feasible"] = feasible
    out_dir = Path(config.paths.report_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = out_dir / f"run_s{theta.sys.scenario_id:02d}_{method}_snr{args.snr:g}.json"
    report.write_text(json.dumps(
        {**summary, "solution": solution_to_dict(solution) if solution is not None else None},
        indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    if not feasible:
        return _error("Infeasible", "no feasible solution produced", EXIT_INFEASIBLE)
    return EXIT_OK


def cmd_sweep(args, config: RunConfig) -> int:
    from .harness.report import emit_report
    from .harness.sweep import sweep
    from .pipeline.run import PipelineConfig

    s = config.sweep
    scenarios = args.scenarios if args.scenarios is not None else s.scenarios
    methods = args.methods if args.methods is not None else s.methods
    snrs = args.snrs if args.snrs is not None else s.snrs_db
    n_mc = args.n_mc if args.n_mc is not None else s.n_mc
    seed = args.seed if args.seed_given else s.seed
    if n_mc < 1:
        return _error("ConfigError", "n_mc must be at least 1", EXIT_CONFIG)
    pconf = PipelineConfig(T_max=config.pipeline.T_max,
                           objective_quality_check=config.pipeline.objective_quality_check,
                           time_cap_s=config.pipeline.time_cap_s,
                           feasibility_tol=config.tolerances.feasibility_tol)
    table = sweep(scenarios, methods, snrs, n_mc, seed, jobs=args.jobs,
                  tol=config.tolerances.feasibility_tol, pipeline_config=pconf)
    out_dir = Path(args.out or config.paths.report_dir)
    files = []
    for fmt in ("csv", "markdown", "plotdata"):
        files += emit_report(table, fmt, out_dir)
    for f in files:
        print(f)
    if all(r.infeasible == r.n for r in table.rows):
        return _error("Infeasible", "every sweep cell failed", EXIT_INFEASIBLE)
    return EXIT_OK


def cmd_replay(args, config: RunConfig) -> int:
    from .pipeline.run import replay
    result, fresh = replay(args.transcript, reexecute=args.reexecute)
    summary = {"terminated_by": result.terminated_by, "revisions": len(result.plans) - 1,
               "final_objective": result.final_objective,
               "strategies": [s.strategy_id.value for s in result.strategy_history]}
    if fresh is not None:
        recorded = [f.comparable() for f in result.feedbacks]
        summary["feedback_identical"] = recorded == [f.comparable() for f in fresh]
    print(json.dumps(summary, sort_keys=True))
    if fresh is not None and not summary["feedback_identical"]:
        return _error("ReplayMismatch", "re-executed feedback differs from the transcript",
                      EXIT_INFEASIBLE)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    from .harness.sweep import default_jobs
    p = argparse.ArgumentParser(prog="precodekit", description=__doc__.split("\n\n")[0])
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--config", help="key = value config file with flat dotted keys")
    p.add_argument("--jobs", type=int, default=default_jobs(),
                   help="worker processes for sweeps (default: number of processors)")
    p.add_argument("--catalog", help="JSON file merged into the scenario catalog")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", help="scenario catalog commands")
    sc_sub = sc.add_subparsers(dest="scenario_command", required=True)
    sc_sub.add_parser("list", help="list catalog scenarios")

    r = sub.add_parser("run", help="solve one scenario instance")
    r.add_argument("scenario", type=int)
    r.add_argument("--snr", type=float, default=10.0, help="SNR in dB (default 10)")
    r.add_argument("--method", default="pipeline",
                   help="'pipeline', a baseline name or a registered strategy id")

    s = sub.add_parser("sweep", help="Monte-Carlo sweep with report files")
    s.add_argument("--scenarios", type=_int_list, help="comma-separated scenario ids")
    s.add_argument("--methods", type=lambda t: [m for m in t.split(",") if m],
                   help="comma-separated methods (default: baselines + pipeline)")
    s.add_argument("--snrs", type=_float_list, help="comma-separated SNRs in dB")
    s.add_argument("--n-mc", type=int, help="realizations per cell")
    s.add_argument("--out", help="report directory")

    rp = sub.add_parser("replay", help="rebuild a recorded pipeline run")
    rp.add_argument("transcript")
    rp.add_argument("--reexecute", action="store_true",
                    help="re-run every recorded plan and compare feedback")
    return p


def main(argv: list[str] | None = None, transport=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        config = load_config(args.config)
        if args.command == "scenario":
            return cmd_scenario_list(args, config)
        if args.command == "run":
            return cmd_run(args, config, transport)
        if args.command == "sweep":
            return cmd_sweep(args, config)
        return cmd_replay(args, config)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), EXIT_CONFIG)
    except (UnknownScenario, UnknownStrategy) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_USAGE)
    except CorruptTranscript as exc:
        return _error("CorruptTranscript", str(exc), EXIT_USAGE)


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
