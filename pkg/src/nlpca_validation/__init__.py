"""Inverse nonlinear PCA with missing-data model selection."""

from .datagen import DataError, GeneratorConfig, MaskedDataset, generate, mask_one_of_d
from .network import NetworkParams, forward, gradient, loss
from .nlpca import (InverseModel, TrainConfig, estimate_missing, infer_scores, load_model,
                    project, save_model, train)
from .optimizer import CgConfig, minimize
from .validation import SweepConfig, SweepReport, run_sweep, select_model

__all__ = [
    "CgConfig", "DataError", "GeneratorConfig", "InverseModel", "MaskedDataset", "NetworkParams",
    "SweepConfig", "SweepReport", "TrainConfig", "estimate_missing", "forward", "generate",
    "gradient", "infer_scores", "load_model", "loss", "mask_one_of_d", "minimize", "project",
    "run_sweep", "save_model", "select_model", "train",
]
