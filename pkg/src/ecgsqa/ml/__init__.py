"""Classifiers, cross-validation and metrics."""

from .metrics import MetricsReport, average_precision, format_table, mean_report, metrics
from .models import (
    ForestConfig,
    LogRegConfig,
    ModelSpec,
    TreeConfig,
    predict,
    predict_proba,
    train,
    train_dtree,
    train_logreg,
    train_rf,
)
from .validation import cross_eval, cross_validate, grouped_folds, stratified_folds

__all__ = [
    "ForestConfig",
    "LogRegConfig",
    "MetricsReport",
    "ModelSpec",
    "TreeConfig",
    "average_precision",
    "cross_eval",
    "cross_validate",
    "format_table",
    "grouped_folds",
    "mean_report",
    "metrics",
    "predict",
    "predict_proba",
    "stratified_folds",
    "train",
    "train_dtree",
    "train_logreg",
    "train_rf",
]
