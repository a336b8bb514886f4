"""Structure-preserving learning of Hamiltonian systems from trajectory data."""

import json

from ._core import (
    ArgumentError,
    Basis,
    ConfigError,
    HamlearnError,
    Model,
    builtin_names,
    check_stability,
    default_domain,
    energy,
    fit,
    integrate,
    preset_names,
    rhs,
)
from . import _core

__all__ = [
    "ArgumentError",
    "Basis",
    "ConfigError",
    "HamlearnError",
    "Model",
    "builtin_names",
    "check_stability",
    "config",
    "converge",
    "default_domain",
    "energy",
    "fit",
    "integrate",
    "preset",
    "preset_names",
    "rhs",
    "run",
]


def preset(name):
    """Experiment configuration of a named preset as a dict."""
    return json.loads(_core.preset_json(name))


def config(**overrides):
    """Validated configuration dict; accepts the same keys as config files."""
    return json.loads(_core.normalize_config_json(json.dumps(overrides)))


def run(cfg, out_dir=None):
    """Run the full pipeline and return the summary dict."""
    return json.loads(_core.run_json(json.dumps(cfg), out_dir or ""))


def converge(cfg, steps=(8e-3, 4e-3, 2e-3, 1e-3, 5e-4)):
    """Conservation study of the learned model over the given RK4 steps."""
    return json.loads(_core.converge_json(json.dumps(cfg), list(steps)))
