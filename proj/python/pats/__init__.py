"""Python bindings for the sensitivity-aware noisy fine-tuning toolkit."""

from ._core import (
    ConfigError,
    DimensionError,
    Error,
    InputError,
    IoError,
    SpecError,
    StateError,
    lr_schedule,
    noise_scale,
    resolve_config,
    run_cli,
    sage_scale_lr,
    sample_perturbation,
    schema_version,
    sensitivity,
    train,
    update_ema,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "InputError",
    "IoError",
    "SpecError",
    "StateError",
    "lr_schedule",
    "noise_scale",
    "resolve_config",
    "run_cli",
    "sage_scale_lr",
    "sample_perturbation",
    "schema_version",
    "sensitivity",
    "train",
    "update_ema",
]
