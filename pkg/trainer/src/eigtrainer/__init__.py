"""Neural approximation of principal-eigenfunction nonlinear parts.

Consumes labeled datasets (CSV + meta sidecar, interchange format 1)
produced by the path-integral library, and trains a sinusoidal MLP on the
supervised loss plus a PDE-residual regularizer evaluated at fresh domain
samples.
"""

from .data import Dataset, DatasetMeta, FormatError, MetaMismatch, load_dataset
from .model import SineMLP
from .train import (
    TrainConfig,
    TrainedModel,
    TrainReport,
    evaluate_model,
    load_model,
    train,
    trajectory_magnitude,
)
from .twin import UnknownSystem, twin_field

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetMeta",
    "FormatError",
    "MetaMismatch",
    "UnknownSystem",
    "load_dataset",
    "SineMLP",
    "TrainConfig",
    "TrainReport",
    "TrainedModel",
    "train",
    "load_model",
    "evaluate_model",
    "trajectory_magnitude",
    "twin_field",
]
