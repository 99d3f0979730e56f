"""Bayesian inverse problems with probabilistic finite element likelihoods."""

import json

from ._core import (
    ConfigError,
    Error,
    bfem_pullout,
    compare,
    fem_pullout,
    parse_config,
    pullout_exact_solution,
    run_experiment,
    triangulate_beam,
)

__all__ = [
    "ConfigError",
    "Error",
    "bfem_pullout",
    "compare",
    "fem_pullout",
    "parse_config",
    "pullout_exact_solution",
    "run",
    "run_experiment",
    "triangulate_beam",
]


def run(config=None, **overrides):
    """Run an experiment from a dict (or JSON string) merged with keyword overrides."""
    if isinstance(config, str):
        config = json.loads(config)
    merged = dict(config or {})
    merged.update(overrides)
    return run_experiment(json.dumps(merged))
