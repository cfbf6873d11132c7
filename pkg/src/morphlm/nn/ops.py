"""Layers the two-tier model is built from.

Everything here is a thin, explicitly-seeded layer over torch CPU tensors:
float64 in tests, float32 in training, no ambient randomness anywhere
(dropout takes a torch.Generator). Attention masks use True = may attend.
"""

import math
from typing import List, Optional, Sequence, Tuple, Union

import torch
import torch.nn.functional as F


def embed_lookup(table: torch.Tensor, ids: Union[Sequence[int], torch.Tensor]) -> torch.Tensor:
    """Rows of table at ids; gradient scatters into looked-up rows only."""
    if not torch.is_tensor(ids):
        ids = torch.tensor(list(ids), dtype=torch.long)
    if ids.numel() > 0:
        lo, hi = int(ids.min()), int(ids.max())
        if lo < 0 or hi >= table.shape[0]:
            raise IndexError(
                f"embedding id out of range: ids span [{lo}, {hi}], table has "
                f"{table.shape[0]} rows"
            )
    return table[ids]


def layer_norm(
    x: torch.Tensor, gain: torch.Tensor, bias: torch.Tensor, eps: float = 1e-5
) -> torch.Tensor:
    """Normalize the last dim to mean 0 / population variance 1, then affine."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    mu = x.mean(dim=-1, keepdim=True)
    var = x.var(dim=-1, unbiased=False, keepdim=True)
    return (x - mu) / torch.sqrt(var + eps) * gain + bias


def seeded_dropout(x: torch.Tensor, p: float, generator: torch.Generator) -> torch.Tensor:
    """Inverted dropout driven by an explicit generator."""
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if p == 0.0:
        return x
    keep = (torch.rand(x.shape, generator=generator, dtype=x.dtype) >= p).to(x.dtype)
    return x * keep / (1.0 - p)


def init_normal_(model: torch.nn.Module, generator: torch.Generator, std: float = 0.02) -> None:
    """normal(0, std) for weight matrices, ones for 1-d gains, zeros for biases."""
    for name, p in model.named_parameters():
        with torch.no_grad():
            if name.endswith("bias"):
                p.zero_()
            elif p.dim() == 1:
                p.fill_(1.0)  # layer-norm gains
            else:
                p.normal_(0.0, std, generator=generator)


class MultiHeadAttention(torch.nn.Module):
    """Scaled dot-product attention with per-head row-stochastic weights."""

    def __init__(self, d: int, heads: int):
        super().__init__()
        if d % heads != 0:
            raise ValueError(f"hidden size {d} not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.head_dim = d // heads
        self.q_proj = torch.nn.Linear(d, d)
        self.k_proj = torch.nn.Linear(d, d)
        self.v_proj = torch.nn.Linear(d, d)
        self.out_proj = torch.nn.Linear(d, d)

    def forward(
        self,
        q: torch.Tensor,
        k: torch.Tensor,
        v: torch.Tensor,
        mask: Optional[torch.Tensor] = None,
        need_weights: bool = False,
    ):
        """q,k,v: (..., n, d). mask: boolean (n, n), True = may attend."""
        n = q.shape[-2]
        qh = self._split(self.q_proj(q))
        kh = self._split(self.k_proj(k))
        vh = self._split(self.v_proj(v))
        scores = qh @ kh.transpose(-2, -1) / math.sqrt(self.head_dim)
        if mask is not None:
            if mask.dtype != torch.bool or mask.shape != (n, n):
                raise ValueError(f"mask must be boolean ({n}, {n})")
            if not bool(mask.any(dim=-1).all()):
                raise ValueError("every mask row needs at least one allowed position")
            scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        out = self._merge(weights @ vh)
        out = self.out_proj(out)
        if need_weights:
            return out, weights
        return out

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        # (..., n, d) -> (..., heads, n, head_dim)
        shape = x.shape[:-1] + (self.heads, self.head_dim)
        return x.reshape(shape).transpose(-3, -2)

    def _merge(self, x: torch.Tensor) -> torch.Tensor:
        x = x.transpose(-3, -2)
        return x.reshape(x.shape[:-2] + (self.d,))


class EncoderLayer(torch.nn.Module):
    """Pre-norm residual block: x + Attn(LN(x)), then + FFN(LN(.)); GELU FFN."""

    def __init__(self, d: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.dropout = dropout
        self.ln1 = torch.nn.LayerNorm(d)
        self.attn = MultiHeadAttention(d, heads)
        self.ln2 = torch.nn.LayerNorm(d)
        self.fc1 = torch.nn.Linear(d, ffn_dim)
        self.fc2 = torch.nn.Linear(ffn_dim, d)

    def forward(
        self,
        x: torch.Tensor,
        mask: Optional[torch.Tensor] = None,
        dropout_generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        # dropout is active only when a generator is supplied (training)
        def drop(t):
            if self.dropout > 0.0 and dropout_generator is not None:
                return seeded_dropout(t, self.dropout, dropout_generator)
            return t

        h = self.ln1(x)
        x = x + drop(self.attn(h, h, h, mask=mask))
        x = x + drop(self.fc2(F.gelu(self.fc1(self.ln2(x)))))
        return x


def softmax_cross_entropy(
    logits: torch.Tensor, targets: Union[Sequence[int], torch.Tensor]
) -> torch.Tensor:
    """Mean NLL over index targets, or mean elementwise BCE over multi-hot.

    Index targets (1-d ints): softmax + negative log likelihood, averaged over
    rows. Multi-hot targets (float tensor, same shape as logits): sigmoid +
    binary cross-entropy averaged over every element (the affix head).
    """
    if not torch.is_tensor(targets):
        targets = torch.tensor(list(targets), dtype=torch.long)
    if targets.dtype in (torch.int32, torch.int64):
        if targets.dim() != 1 or targets.shape[0] != logits.shape[0]:
            raise ValueError("index targets must be 1-d, one per logit row")
        c = logits.shape[-1]
        if targets.numel() and (int(targets.min()) < 0 or int(targets.max()) >= c):
            raise ValueError(f"target class out of range for {c} classes")
        logp = F.log_softmax(logits, dim=-1)
        return -logp.gather(-1, targets.long().unsqueeze(-1)).mean()
    if targets.shape != logits.shape:
        raise ValueError("multi-hot targets must match logits shape")
    return F.binary_cross_entropy_with_logits(logits, targets.to(logits.dtype))
