from .ops import (
    embed_lookup,
    layer_norm,
    seeded_dropout,
    init_normal_,
    MultiHeadAttention,
    EncoderLayer,
    softmax_cross_entropy,
)
from .gradcheck import finite_diff_gradcheck
from .checkpoint import (
    save_tensors,
    load_tensors,
    write_config,
    read_config,
)

__all__ = [
    "embed_lookup",
    "layer_norm",
    "seeded_dropout",
    "init_normal_",
    "MultiHeadAttention",
    "EncoderLayer",
    "softmax_cross_entropy",
    "finite_diff_gradcheck",
    "save_tensors",
    "load_tensors",
    "write_config",
    "read_config",
]
