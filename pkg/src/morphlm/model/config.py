"""Model dimensions, vocab sizes, and the analytic parameter count.

The paper-scale preset is tier1=(128,4,4,512), tier2=(768,12,12,3072),
max sequence 512; with the assumed vocabulary sizes the analytic count lands
around 105M parameters. count_parameters is exact: it must equal the sum of
tensor sizes of a constructed model (property-tested).
"""

from dataclasses import dataclass, asdict, replace
from typing import Dict

from ..nn.checkpoint import read_config, write_config

VARIANTS = ("bert", "gpt")


@dataclass
class ModelConfig:
    # tier-1: per-word morphology encoder
    tier1_hidden: int = 128
    tier1_heads: int = 4
    tier1_layers: int = 4
    tier1_ffn: int = 512
    # tier-2: sentence encoder
    tier2_hidden: int = 768
    tier2_heads: int = 12
    tier2_layers: int = 12
    tier2_ffn: int = 3072
    # prediction spaces
    n_stems: int = 24000
    n_affixes: int = 1000
    n_pos_tags: int = 200
    n_affix_sets: int = 8000
    # sequence geometry
    max_seq_len: int = 512
    tier1_max_slots: int = 16
    # heads: bottleneck width of the feed-forward prediction heads
    head_dim: int = 0  # 0 -> tier2_hidden // 2
    variant: str = "bert"
    dropout: float = 0.1

    def __post_init__(self):
        if self.head_dim == 0:
            self.head_dim = self.tier2_hidden // 2
        self.validate()

    def validate(self) -> None:
        if self.tier1_hidden % self.tier1_heads != 0:
            raise ValueError(
                f"tier1 hidden {self.tier1_hidden} not divisible by "
                f"{self.tier1_heads} heads"
            )
        if self.tier2_hidden % self.tier2_heads != 0:
            raise ValueError(
                f"tier2 hidden {self.tier2_hidden} not divisible by "
                f"{self.tier2_heads} heads"
            )
        if not 1 <= self.max_seq_len <= 512:
            raise ValueError(f"max_seq_len {self.max_seq_len} outside [1, 512]")
        if self.tier1_max_slots < 4:
            raise ValueError("tier1_max_slots must fit stem+POS+affix-set+1 affix")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        for name in ("n_stems", "n_affixes", "n_pos_tags", "n_affix_sets"):
            if getattr(self, name) < 5:
                raise ValueError(f"{name} too small to hold reserved ids")

    def with_variant(self, variant: str) -> "ModelConfig":
        return replace(self, variant=variant)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, object]) -> "ModelConfig":
        return cls(**d)

    def save(self, path: str) -> None:
        write_config(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> "ModelConfig":
        raw = read_config(path)
        fields = {k: raw[k] for k in cls().to_dict() if k in raw}
        return cls(**fields)

    @classmethod
    def paper_preset(cls, **overrides) -> "ModelConfig":
        return cls(**overrides)

    @classmethod
    def tiny(cls, **overrides) -> "ModelConfig":
        """Desk-scale preset used throughout the tests."""
        base = dict(
            tier1_hidden=16,
            tier1_heads=2,
            tier1_layers=2,
            tier1_ffn=32,
            tier2_hidden=32,
            tier2_heads=2,
            tier2_layers=2,
            tier2_ffn=64,
            n_stems=64,
            n_affixes=16,
            n_pos_tags=8,
            n_affix_sets=16,
            max_seq_len=64,
            tier1_max_slots=12,
            head_dim=16,
            dropout=0.0,
        )
        base.update(overrides)
        return cls(**base)


def _encoder_layer_params(hidden: int, ffn: int) -> int:
    # 4 attention projections with bias, 2 feed-forward linears, 2 layer norms
    return 4 * (hidden * hidden + hidden) + (hidden * ffn + ffn) + (ffn * hidden + hidden) + 4 * hidden


def _head_params(hidden: int, head_dim: int, vocab: int) -> int:
    # Linear(hidden->head_dim) + LayerNorm(head_dim) + Linear(head_dim->vocab)
    return (hidden * head_dim + head_dim) + 2 * head_dim + (head_dim * vocab + vocab)


def parameter_breakdown(config: ModelConfig) -> Dict[str, int]:
    """Analytic parameter count per component."""
    c = config
    h1, h2 = c.tier1_hidden, c.tier2_hidden
    emb = (c.n_stems + c.n_affixes + c.n_pos_tags + c.n_affix_sets) * h1
    emb += c.tier1_max_slots * h1  # tier-1 positions
    emb += c.max_seq_len * h2  # tier-2 positions
    return {
        "embeddings": emb,
        "tier1_stack": c.tier1_layers * _encoder_layer_params(h1, c.tier1_ffn),
        "tier1_final_norm": 2 * h1,
        "composition": 3 * h1 * h2 + h2,
        "tier2_stack": c.tier2_layers * _encoder_layer_params(h2, c.tier2_ffn),
        "tier2_final_norm": 2 * h2,
        "heads": (
            _head_params(h2, c.head_dim, c.n_stems)
            + _head_params(h2, c.head_dim, c.n_affixes)
            + _head_params(h2, c.head_dim, c.n_pos_tags)
            + _head_params(h2, c.head_dim, c.n_affix_sets)
        ),
    }


def count_parameters(config: ModelConfig) -> int:
    return sum(parameter_breakdown(config).values())
