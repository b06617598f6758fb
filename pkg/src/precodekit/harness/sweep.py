"""Monte-Carlo sweeps with common random numbers."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from ..errors import NotConverged, UnknownStrategy
from ..scenarios import instantiate_scenario, load_catalog
from .evaluation import DEFAULT_TOL, compute_metrics, feasibility_check

DEFAULT_SNRS = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
CSV_HEADER = ("scenario_id", "method", "snr_db", "metric", "mean", "std", "n", "infeasible")
PIPELINE = "pipeline"

Method = Union[str, tuple[str, Callable]]


@dataclass(frozen=True)
class MetricRow:
    scenario_id: int
    method: str
    snr_db: float
    metric: str
    mean: float
    std: float
    n: int
    infeasible: int

    def same(self, other: "MetricRow") -> bool:
        def eq(a, b):
            if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
                return True
            return a == b
        return all(eq(getattr(self, f), getattr(other, f)) for f in CSV_HEADER)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class MetricTable:
    rows: list[MetricRow] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        return (isinstance(other, MetricTable) and len(self.rows) == len(other.rows)
                and all(a.same(b) for a, b in zip(self.rows, other.rows)))

    def cell(self, scenario_id: int, method: str, snr_db: float) -> MetricRow:
        for r in self.rows:
            if r.scenario_id == scenario_id and r.method == method and r.snr_db == float(snr_db):
                return r
        raise KeyError((scenario_id, method, snr_db))

    def methods(self, scenario_id: int) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows if r.scenario_id == scenario_id))

    def snrs(self, scenario_id: int) -> list[float]:
        return sorted({r.snr_db for r in self.rows if r.scenario_id == scenario_id})

    def scenario_ids(self) -> list[int]:
        return list(dict.fromkeys(r.scenario_id for r in self.rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, f)) for f in CSV_HEADER])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [MetricRow(int(r[0]), r[1], float(r[2]), r[3], float(r[4]), float(r[5]), int(r[6]),
                          int(r[7])) for r in reader if r]
        return cls(rows)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> "MetricTable":
        return cls.from_csv(Path(path).read_text())


@dataclass
class FeasibilityMatrix:
    scenario_id: int
    n: int
    cells: dict[tuple[str, float], float]

    def rate(self, method: str, snr_db: float) -> float:
        return self.cells[(method, float(snr_db))]


def realization_seed(seed: int, index: int) -> int:
    """Instance seed of realization ``index``; shared by all methods and SNRs."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _method_name(m: Method) -> str:
    return m[0] if isinstance(m, tuple) else m


def methods_for(scenario_id: int, methods: Sequence[Method] | None, catalog=None) -> list[Method]:
    """Methods of ``methods`` that apply to the scenario (default: its
    catalog baselines plus the pipeline)."""
    from ..solvers.registry import registered_ids, registry_lookup
    entry = (catalog or load_catalog()).entry(scenario_id)
    baselines = list(entry["baselines"])
    if methods is None:
        return baselines + [PIPELINE]
    out = []
    for m in methods:
        name = _method_name(m)
        if isinstance(m, tuple) or name == PIPELINE or name in baselines:
            out.append(m)
        elif name in {s.value for s in registered_ids()}:
            h = registry_lookup(name)
            if (entry["architecture"] in {a.value for a in h.architectures}
                    and entry["objective"] in {o.value for o in h.objectives}):
                out.append(m)
    return out


def _solution(method: Method, D, theta, cache, pipeline_config):
    from ..solvers.registry import registered_ids, solve_default
    if isinstance(method, tuple):
        return method[1](theta)
    if method == PIPELINE:
        from ..pipeline.run import run_pipeline
        res = run_pipeline(D, theta, pipeline_config, cache=cache)
        return res.final_solution if res.terminated_by == "Accepted" else None
    if method in {s.value for s in registered_ids()}:
        try:
            return solve_default(method, theta).solution
        except NotConverged as exc:
            return exc.outcome.solution
    return cache.solution(method)


def evaluate_method(method: Method, D, theta, cache, metric: str, tol: float,
                    pipeline_config=None) -> float | None:
    """Metric value of ``method`` on one instance, or None if it fails or
    is infeasible at ``tol``."""
    try:
        sol = _solution(method, D, theta, cache, pipeline_config)
        if sol is None or feasibility_check(sol, theta, tol):
            return None
        v = compute_metrics(sol, theta).value(metric)
    except Exception:
        return None
    return v if math.isfinite(v) else None


def _realization(args):
    """All methods at all SNRs for one (scenario, realization index)."""
    from ..pipeline.steps import BaselineCache
    sid, index, seed, methods, snrs, tol, pipeline_config = args
    catalog = load_catalog()
    metric = catalog.entry(sid)["metric"]
    inst_seed = realization_seed(seed, index)
    out = {}
    for snr in snrs:
        D, theta = instantiate_scenario(sid, snr, inst_seed, catalog)
        cache = BaselineCache(theta)
        for m in methods:
            out[(_method_name(m), float(snr))] = evaluate_method(m, D, theta, cache, metric, tol,
                                                                 pipeline_config)
    return sid, index, out


def sweep(scenario_ids: Iterable[int], methods: Sequence[Method] | None = None,
          snrs_db: Sequence[float] = DEFAULT_SNRS, n_mc: int = 100, seed: int = 0, *,
          jobs: int = 1, tol: float = DEFAULT_TOL, pipeline_config=None) -> MetricTable:
    """Mean/std of each scenario metric per (method, SNR) over ``n_mc``
    seeded realizations.

    Realization ``i`` uses the same channel for every method and SNR. Means
    and stds (population) cover feasible runs only; failures and infeasible
    runs are counted in ``infeasible``. Serial and parallel runs give
    identical tables.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    catalog = load_catalog()
    scenario_ids = list(scenario_ids)
    plan = {}
    for sid in scenario_ids:
        plan[sid] = methods_for(sid, methods, catalog)
    if methods is not None:
        used = {_method_name(m) for ms in plan.values() for m in ms}
        unknown = [_method_name(m) for m in methods if _method_name(m) not in used]
        if unknown:
            raise UnknownStrategy(f"methods {unknown} apply to none of the scenarios")
    snrs = [float(s) for s in snrs_db]
    tasks = [(sid, i, seed, plan[sid], snrs, tol, pipeline_config)
             for sid in scenario_ids for i in range(n_mc)]
    jobs = max(1, int(jobs or 1))
    if jobs == 1:
        results = [_realization(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_realization, tasks, chunksize=1))
    results.sort(key=lambda r: (scenario_ids.index(r[0]), r[1]))

    rows = []
    for sid in scenario_ids:
        metric = catalog.entry(sid)["metric"]
        per = [r[2] for r in results if r[0] == sid]
        for m in plan[sid]:
            name = _method_name(m)
            for snr in snrs:
                vals = [p[(name, snr)] for p in per]
                ok = np.array([v for v in vals if v is not None], dtype=float)
                mean = float(ok.mean()) if ok.size else math.nan
                std = float(ok.std()) if ok.size else math.nan
                rows.append(MetricRow(sid, name, snr, metric, mean, std, n_mc,
                                      n_mc - int(ok.size)))
    return MetricTable(rows)


def feasibility_matrix(scenario_id: int, methods: Sequence[Method] | None = None,
                       snrs_db: Sequence[float] = DEFAULT_SNRS, n_mc: int = 100, seed: int = 0,
                       tol: float = DEFAULT_TOL, *, jobs: int = 1,
                       pipeline_config=None) -> FeasibilityMatrix:
    """Fraction of the ``n_mc`` realizations each method solves feasibly."""
    table = sweep([scenario_id], methods, snrs_db, n_mc, seed, jobs=jobs, tol=tol,
                  pipeline_config=pipeline_config)
    cells = {(r.method, r.snr_db): (r.n - r.infeasible) / r.n for r in table.rows}
    return FeasibilityMatrix(scenario_id, n_mc, cells)


def default_jobs() -> int:
    return os.cpu_count() or 1
