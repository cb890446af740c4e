"""Phase-shifted adversarial training on small synthetic tasks."""

from ._core import (
    ConfigError,
    Dataset,
    Error,
    FormatError,
    Model,
    NumericError,
    ShapeError,
    StateError,
    derive_seed,
    fourier_coefficient,
    frequency_errors,
    gaussian_low_pass,
    load_model,
    make_dataset,
    run_experiment,
    sampling_distribution,
    train,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "Error",
    "FormatError",
    "Model",
    "NumericError",
    "ShapeError",
    "StateError",
    "derive_seed",
    "fourier_coefficient",
    "frequency_errors",
    "gaussian_low_pass",
    "load_model",
    "make_dataset",
    "run_experiment",
    "sampling_distribution",
    "train",
]
