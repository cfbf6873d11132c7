"""Classifier fine-tuning: data, metrics, training protocol, ensembling."""

from .metrics import (
    EvalReport,
    confusion_counts,
    confusion_matrix,
    evaluate_labels,
    weighted_f1,
)
from .data import (
    DatasetSplits,
    LabeledExample,
    discover_labels,
    has_split_column,
    make_examples,
    parse_tsv,
    read_tsv_dataset,
    split_examples,
)
from .trainer import (
    FinetuneHyper,
    FinetuneResult,
    classify_forward,
    evaluate_model,
    finetune_run,
    predict_probabilities,
)
from .protocol import (
    DEFAULT_GRID,
    EnsembleSelection,
    GridPoint,
    ensemble_protocol,
    ensemble_vote,
    format_stability,
    grid_search,
    run_seeds,
    select_ensemble,
    stability_report,
    stability_stats,
)

__all__ = [
    "EvalReport",
    "confusion_counts",
    "confusion_matrix",
    "evaluate_labels",
    "weighted_f1",
    "DatasetSplits",
    "LabeledExample",
    "discover_labels",
    "has_split_column",
    "make_examples",
    "parse_tsv",
    "read_tsv_dataset",
    "split_examples",
    "FinetuneHyper",
    "FinetuneResult",
    "classify_forward",
    "evaluate_model",
    "finetune_run",
    "predict_probabilities",
    "DEFAULT_GRID",
    "EnsembleSelection",
    "GridPoint",
    "ensemble_protocol",
    "ensemble_vote",
    "format_stability",
    "grid_search",
    "run_seeds",
    "select_ensemble",
    "stability_report",
    "stability_stats",
]
