from .config import ModelConfig, count_parameters, parameter_breakdown
from .two_tier import (
    TwoTierModel,
    SlotHead,
    TaskOutput,
    mlm_forward,
    gpt_forward,
    save_model,
    load_model,
)

__all__ = [
    "ModelConfig",
    "count_parameters",
    "parameter_breakdown",
    "TwoTierModel",
    "SlotHead",
    "TaskOutput",
    "mlm_forward",
    "gpt_forward",
    "save_model",
    "load_model",
]
