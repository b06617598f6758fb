"""Precoding optimization toolkit: benchmark scenarios, baseline precoders,
iterative solvers, a staged solver-selection pipeline and a Monte-Carlo
benchmark harness."""

from .scenarios import instantiate_scenario, load_catalog, noise_variance

__version__ = "0.1.0"

__all__ = ["instantiate_scenario", "load_catalog", "noise_variance", "__version__"]
