"""Missing-value imputation for numeric tables: chained equations with pluggable
regressors and cluster features, simulated missingness, baselines and scoring."""
from __future__ import annotations

__version__ = "0.1.0"

from .amputation import MissingKind, MissingnessSpec, amputate, count_unique_missing_patterns, pattern_count_curve
from .baselines import KNN, IterativeSVD, MatrixFactorization, Median, impute_baseline, run_baseline
from .clustering import ClusterModel, InfusionMethod, infuse, kmeans, select_k, silhouette_score
from .data import (
    DataMatrix,
    SplitSpec,
    StandardizationParams,
    destandardize,
    read_csv,
    split_train_test,
    standardize_apply,
    standardize_fit,
    write_csv,
)
from .evaluation import (
    CvResult,
    ImputationScore,
    SweepTable,
    nested_cv_classify,
    score_imputation,
    sum_nrmse,
    vote_best_model,
)
from .mice import ImputationModel, MiceConfig, convergence_trace, fit_transform, load_model, save_model, transform
from .regressors import HyperParams, RegressorKind, fit_classifier, fit_regressor, predict, sample_prediction

__all__ = [
    "ClusterModel", "CvResult", "DataMatrix", "HyperParams", "ImputationModel", "ImputationScore",
    "InfusionMethod", "IterativeSVD", "KNN", "MatrixFactorization", "Median", "MiceConfig",
    "MissingKind", "MissingnessSpec", "RegressorKind", "SplitSpec", "StandardizationParams",
    "SweepTable", "amputate", "convergence_trace", "count_unique_missing_patterns", "destandardize",
    "fit_classifier", "fit_regressor", "fit_transform", "impute_baseline", "infuse", "kmeans",
    "load_model", "nested_cv_classify", "pattern_count_curve", "predict", "read_csv", "run_baseline",
    "sample_prediction", "save_model", "score_imputation", "select_k", "silhouette_score",
    "split_train_test", "standardize_apply", "standardize_fit", "sum_nrmse", "transform",
    "vote_best_model", "write_csv",
]
