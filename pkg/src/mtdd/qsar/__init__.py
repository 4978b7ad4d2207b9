"""QSAR activity classifiers: training, AutoML search, serialization and batch inference."""

from .automl import AutoMLConfig, Candidate, SearchResult, automl_search, run_search, sample_candidate, select_best
from .dataset import BioassayDataset, EmptyDataset, SingleClassDataset, read_bioassay_csv
from .metrics import Metrics, SingleClassTestSet, accuracy, roc_auc, score_metrics
from .model import (
    ALGORITHMS,
    ModelFormatError,
    Tree,
    TreeEnsembleModel,
    predict,
    predict_batch,
    predict_matrix,
    staged_probabilities,
)
from .train import evaluate, train_model

__all__ = [
    "ALGORITHMS",
    "AutoMLConfig",
    "BioassayDataset",
    "Candidate",
    "EmptyDataset",
    "Metrics",
    "ModelFormatError",
    "SearchResult",
    "SingleClassDataset",
    "SingleClassTestSet",
    "Tree",
    "TreeEnsembleModel",
    "accuracy",
    "automl_search",
    "evaluate",
    "predict",
    "predict_batch",
    "predict_matrix",
    "read_bioassay_csv",
    "roc_auc",
    "run_search",
    "sample_candidate",
    "score_metrics",
    "select_best",
    "staged_probabilities",
    "train_model",
]
