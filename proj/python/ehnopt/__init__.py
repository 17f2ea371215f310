"""Optimal operation policies for an RF energy harvesting node."""

from ._core import (  # noqa: F401
    ConfigError,
    ExperimentConfig,
    ModelError,
    ModelParams,
    evaluate,
    parse_config,
    simulate,
    solve,
    states,
    static_policy,
    transition,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ModelError",
    "ModelParams",
    "evaluate",
    "parse_config",
    "simulate",
    "solve",
    "states",
    "static_policy",
    "transition",
]
