"""Adversarial prediction and imputation for networked time series.

Arrays follow the ``(N, V, T)`` convention: samples, graph nodes, timestamps.
Masks hold 1 for observed and 0 for missing entries.
"""
from .baselines import BASELINES, BaselineImputer, baseline_fill
from .core import (
    Graph,
    LayoutSpec,
    Mask,
    NetsDataset,
    NetsSample,
    apply_masking_operator,
    make_prediction_mask,
    prediction_mask_array,
    window_series,
)
from .estimator import NetsImpGAN, PredictionEnsemble, sample_ensemble
from .io import DataFormatError, load_dataset, load_dataset_dir, save_dataset
from .metrics import mae, mape, per_step, point_predict, rmse, wasserstein_distance
from .missingness import MissingPattern, mask_dataset
from .scaling import NodeMinMaxScaler
from .synth import SynthSpec, disrupt, generate
from .training import ImpGanModel, TrainConfig, impute_forward, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "BASELINES",
    "BaselineImputer",
    "baseline_fill",
    "Graph",
    "LayoutSpec",
    "Mask",
    "NetsDataset",
    "NetsSample",
    "apply_masking_operator",
    "make_prediction_mask",
    "prediction_mask_array",
    "window_series",
    "NetsImpGAN",
    "PredictionEnsemble",
    "sample_ensemble",
    "DataFormatError",
    "load_dataset",
    "load_dataset_dir",
    "save_dataset",
    "mae",
    "mape",
    "per_step",
    "point_predict",
    "rmse",
    "wasserstein_distance",
    "MissingPattern",
    "mask_dataset",
    "NodeMinMaxScaler",
    "SynthSpec",
    "disrupt",
    "generate",
    "ImpGanModel",
    "TrainConfig",
    "impute_forward",
    "load_checkpoint",
    "save_checkpoint",
    "train",
]
