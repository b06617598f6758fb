"""Metrics, feasibility checks, Monte-Carlo sweeps and report artifacts."""

from .evaluation import MetricSet, Violation, compute_metrics, feasibility_check
