"""The two-tier encoder.

Tier-1 runs a small bidirectional encoder over one word's morphology slots
([stem, POS, affix-set, affix...] + positions); the word vector is
concat(stem-slot output, POS-slot output, mean affix output or zeros)
projected to tier-2 width. Tier-2 contextualizes word vectors: the bert
variant prepends a CLS word and attends freely, the gpt variant appends an
EOS word and applies a causal mask (tier-1 stays bidirectional either way).
Four feed-forward heads predict stem, affixes (multi-label), POS, affix set.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from ..nn.checkpoint import load_tensors, save_tensors
from ..nn.ops import EncoderLayer, embed_lookup, init_normal_, softmax_cross_entropy
from ..tokenizer.vocab import CLS_ID, EOS_ID, MorphoWord, special_word
from .config import ModelConfig


class SlotHead(torch.nn.Module):
    """Feed-forward prediction head: Linear -> GELU -> LayerNorm -> Linear."""

    def __init__(self, hidden: int, head_dim: int, out_size: int):
        super().__init__()
        self.fc = torch.nn.Linear(hidden, head_dim)
        self.norm = torch.nn.LayerNorm(head_dim)
        self.out = torch.nn.Linear(head_dim, out_size)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.norm(F.gelu(self.fc(x))))


class TwoTierModel(torch.nn.Module):
    def __init__(
        self,
        config: ModelConfig,
        generator: Optional[torch.Generator] = None,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        config.validate()
        self.config = config
        c = config
        h1, h2 = c.tier1_hidden, c.tier2_hidden

        self.stem_emb = torch.nn.Parameter(torch.empty(c.n_stems, h1))
        self.affix_emb = torch.nn.Parameter(torch.empty(c.n_affixes, h1))
        self.pos_emb = torch.nn.Parameter(torch.empty(c.n_pos_tags, h1))
        self.affix_set_emb = torch.nn.Parameter(torch.empty(c.n_affix_sets, h1))
        self.tier1_pos_emb = torch.nn.Parameter(torch.empty(c.tier1_max_slots, h1))
        self.tier1_layers = torch.nn.ModuleList(
            EncoderLayer(h1, c.tier1_heads, c.tier1_ffn, c.dropout)
            for _ in range(c.tier1_layers)
        )
        self.tier1_final_norm = torch.nn.LayerNorm(h1)
        self.compose = torch.nn.Linear(3 * h1, h2)
        self.tier2_pos_emb = torch.nn.Parameter(torch.empty(c.max_seq_len, h2))
        self.tier2_layers = torch.nn.ModuleList(
            EncoderLayer(h2, c.tier2_heads, c.tier2_ffn, c.dropout)
            for _ in range(c.tier2_layers)
        )
        self.tier2_final_norm = torch.nn.LayerNorm(h2)
        self.stem_head = SlotHead(h2, c.head_dim, c.n_stems)
        self.affix_head = SlotHead(h2, c.head_dim, c.n_affixes)
        self.pos_head = SlotHead(h2, c.head_dim, c.n_pos_tags)
        self.affix_set_head = SlotHead(h2, c.head_dim, c.n_affix_sets)
        self.classifier: Optional[SlotHead] = None

        if generator is None:
            generator = torch.Generator().manual_seed(0)
        init_normal_(self, generator)
        # 2-d position/embedding tables got normal init above; nothing else to do
        self.to(dtype)

    # -- heads for the trainer ------------------------------------------------

    def attach_classifier(self, n_classes: int, generator: torch.Generator) -> None:
        """Fine-tune head over CLS (bert) / EOS (gpt) final state."""
        head = SlotHead(self.config.tier2_hidden, self.config.head_dim, n_classes)
        init_normal_(head, generator)
        self.classifier = head.to(next(self.parameters()).dtype)

    def head_parameter_names(self) -> List[str]:
        """Task-private parameters (bypass gradient surgery)."""
        return [
            n
            for n, _ in self.named_parameters()
            if n.split(".")[0]
            in ("stem_head", "affix_head", "pos_head", "affix_set_head", "classifier")
        ]

    # -- tier 1 ---------------------------------------------------------------

    def encode_words(
        self,
        words: Sequence[MorphoWord],
        dropout_generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """(n_words, tier2_hidden); each word encoded independently."""
        # one tier-1 pass per word: a word's vector must be bitwise independent
        # of its neighbors (the gpt causality contract is exact, and batching
        # words together changes GEMM shapes and therefore rounding)
        return torch.stack([self.encode_word(w, dropout_generator) for w in words])

    def encode_word(
        self, word: MorphoWord, dropout_generator: Optional[torch.Generator] = None
    ) -> torch.Tensor:
        c = self.config
        k = len(word.affix_ids)
        if 3 + k > c.tier1_max_slots:
            raise ValueError(
                f"word {word.surface!r} needs {3 + k} tier-1 slots, "
                f"limit is {c.tier1_max_slots}"
            )
        rows = [
            embed_lookup(self.stem_emb, [word.stem_id]),
            embed_lookup(self.pos_emb, [word.pos_tag_id]),
            embed_lookup(self.affix_set_emb, [word.affix_set_id]),
        ]
        if k:
            rows.append(embed_lookup(self.affix_emb, list(word.affix_ids)))
        x = torch.cat(rows, dim=0) + self.tier1_pos_emb[: 3 + k]
        for layer in self.tier1_layers:
            x = layer(x, dropout_generator=dropout_generator)
        x = self.tier1_final_norm(x)
        affix_pool = x[3:].mean(dim=0) if k else torch.zeros_like(x[0])
        return self.compose(torch.cat([x[0], x[1], affix_pool]))

    # -- tier 2 ---------------------------------------------------------------

    def encode_sequence(
        self,
        words: Sequence[MorphoWord],
        dropout_generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """Contextualized final states, (len(words)+1, tier2_hidden).

        bert: row 0 is the prepended CLS word, rows 1.. are the words.
        gpt: rows 0..n-1 are the words, row n is the appended EOS; causal mask.
        """
        c = self.config
        if not words:
            raise ValueError("cannot encode an empty word sequence")
        m = len(words) + 1
        if m > c.max_seq_len:
            raise ValueError(
                f"sequence of {len(words)} words + 1 special slot exceeds "
                f"max_seq_len {c.max_seq_len}"
            )
        if c.variant == "bert":
            seq = [special_word(CLS_ID)] + list(words)
            mask = None
        else:
            seq = list(words) + [special_word(EOS_ID)]
            mask = torch.tril(torch.ones(m, m, dtype=torch.bool))
        x = self.encode_words(seq, dropout_generator) + self.tier2_pos_emb[:m]
        for layer in self.tier2_layers:
            x = layer(x, mask=mask, dropout_generator=dropout_generator)
        return self.tier2_final_norm(x)


@dataclass
class TaskOutput:
    """Per-slot logits at prediction positions plus the four separate losses."""

    stem_logits: torch.Tensor
    affix_logits: torch.Tensor
    pos_logits: torch.Tensor
    affix_set_logits: torch.Tensor
    stem_loss: torch.Tensor
    affix_loss: torch.Tensor
    pos_loss: torch.Tensor
    affix_set_loss: torch.Tensor

    def losses(self) -> Dict[str, torch.Tensor]:
        return {
            "stem": self.stem_loss,
            "affix": self.affix_loss,
            "pos": self.pos_loss,
            "affix_set": self.affix_set_loss,
        }


def _multi_hot(affix_targets: Sequence[Sequence[int]], n_affixes: int, dtype) -> torch.Tensor:
    t = torch.zeros(len(affix_targets), n_affixes, dtype=dtype)
    for r, ids in enumerate(affix_targets):
        for a in ids:
            t[r, a] = 1.0
    return t


def _head_losses(
    model: TwoTierModel,
    states: torch.Tensor,
    stem_targets: Sequence[int],
    affix_targets: Sequence[Sequence[int]],
    pos_targets: Sequence[int],
    affix_set_targets: Sequence[int],
) -> TaskOutput:
    stem_logits = model.stem_head(states)
    affix_logits = model.affix_head(states)
    pos_logits = model.pos_head(states)
    affix_set_logits = model.affix_set_head(states)
    affix_mh = _multi_hot(affix_targets, model.config.n_affixes, stem_logits.dtype)
    return TaskOutput(
        stem_logits=stem_logits,
        affix_logits=affix_logits,
        pos_logits=pos_logits,
        affix_set_logits=affix_set_logits,
        stem_loss=softmax_cross_entropy(stem_logits, stem_targets),
        affix_loss=softmax_cross_entropy(affix_logits, affix_mh),
        pos_loss=softmax_cross_entropy(pos_logits, pos_targets),
        affix_set_loss=softmax_cross_entropy(affix_set_logits, affix_set_targets),
    )


def mlm_forward(
    batch,
    model: TwoTierModel,
    dropout_generator: Optional[torch.Generator] = None,
) -> TaskOutput:
    """Masked-morphology forward for the bert variant.

    batch needs: sentences (corrupted word sequences), positions (list of
    (sentence_idx, word_idx) masked positions), and four target lists aligned
    with positions: stem_targets, affix_targets (id tuples), pos_targets,
    affix_set_targets. The MaskedBatch built by mask_batch satisfies this.
    """
    if model.config.variant != "bert":
        raise ValueError("mlm_forward requires the bert variant")
    if not batch.positions:
        raise ValueError("batch has zero masked positions")
    states_per_sentence = [
        model.encode_sequence(s, dropout_generator) for s in batch.sentences
    ]
    # CLS occupies row 0, so word w sits at row w+1
    rows = [states_per_sentence[si][wi + 1] for si, wi in batch.positions]
    states = torch.stack(rows)
    return _head_losses(
        model,
        states,
        batch.stem_targets,
        batch.affix_targets,
        batch.pos_targets,
        batch.affix_set_targets,
    )


def gpt_forward(
    words: Sequence[MorphoWord],
    model: TwoTierModel,
    dropout_generator: Optional[torch.Generator] = None,
) -> TaskOutput:
    """Next-word morphology forward: state t predicts the slots of word t+1."""
    if model.config.variant != "gpt":
        raise ValueError("gpt_forward requires the gpt variant")
    n = len(words)
    if n < 2:
        raise ValueError(f"gpt_forward needs at least 2 words, got {n}")
    states = model.encode_sequence(words, dropout_generator)[: n - 1]
    nxt = list(words)[1:]
    return _head_losses(
        model,
        states,
        [w.stem_id for w in nxt],
        [w.affix_ids for w in nxt],
        [w.pos_tag_id for w in nxt],
        [w.affix_set_id for w in nxt],
    )


def save_model(model: TwoTierModel, checkpoint_path: str, config_path: str, meta=None) -> None:
    save_tensors(checkpoint_path, dict(model.state_dict()), meta=meta)
    model.config.save(config_path)


def load_model(
    checkpoint_path: str, config_path: str, dtype: torch.dtype = torch.float32
) -> TwoTierModel:
    config = ModelConfig.load(config_path)
    tensors, meta = load_tensors(checkpoint_path)
    n_classes = meta.get("n_classes") if isinstance(meta, dict) else None
    model = TwoTierModel(config, dtype=dtype)
    if n_classes:
        model.attach_classifier(int(n_classes), torch.Generator().manual_seed(0))
    state = {k: v.to(dtype) for k, v in tensors.items()}
    model.load_state_dict(state)
    return model
