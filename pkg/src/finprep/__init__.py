"""Align quarterly fundamentals with daily prices and compare polynomial regressions."""

from .experiment import ExperimentConfig, run_cell, run_comparison, run_sweep
from .metrics import MetricsReport, build_report
from .model import ConditioningWarning, FittedModel, SplitSpec, fit_model, fit_ols
from .preprocess import PreprocessSpec, Technique, run_preprocess
from .series import AlignedDataset, TimeSeries, inner_join, parse_csv, read_csv

__all__ = [
    "AlignedDataset",
    "ConditioningWarning",
    "ExperimentConfig",
    "FittedModel",
    "MetricsReport",
    "PreprocessSpec",
    "SplitSpec",
    "Technique",
    "TimeSeries",
    "build_report",
    "fit_model",
    "fit_ols",
    "inner_join",
    "parse_csv",
    "read_csv",
    "run_cell",
    "run_comparison",
    "run_preprocess",
    "run_sweep",
]

__version__ = "0.1.0"
