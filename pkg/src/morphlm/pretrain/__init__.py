from .corpus import (
    SyntheticLanguage,
    AnalyzedWord,
    analyze_corpus,
    build_vocabularies,
    to_morpho_words,
    LABELS,
)
from .masking import MaskedBatch, mask_batch
from .gradvac import (
    TASKS,
    VaccineState,
    SurgeryDiagnostics,
    PairEvent,
    gradvac_combine,
)
from .optim import LrSchedule, lr_at_step, AdamState, adam_step, NonFiniteGradient
from .loop import (
    PretrainHyper,
    PretrainResult,
    multitask_losses,
    pretrain_step,
    pretrain_run,
    masked_stem_accuracy,
    CURVE_COLUMNS,
)

__all__ = [
    "SyntheticLanguage",
    "AnalyzedWord",
    "analyze_corpus",
    "build_vocabularies",
    "to_morpho_words",
    "LABELS",
    "MaskedBatch",
    "mask_batch",
    "TASKS",
    "VaccineState",
    "SurgeryDiagnostics",
    "PairEvent",
    "gradvac_combine",
    "LrSchedule",
    "lr_at_step",
    "AdamState",
    "adam_step",
    "NonFiniteGradient",
    "PretrainHyper",
    "PretrainResult",
    "multitask_losses",
    "pretrain_step",
    "pretrain_run",
    "masked_stem_accuracy",
    "CURVE_COLUMNS",
]
