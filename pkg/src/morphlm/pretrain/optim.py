"""Adam with decoupled weight decay and the linear warmup/decay schedule."""

import math
from dataclasses import dataclass
from typing import Dict

import torch


@dataclass
class LrSchedule:
    peak_lr: float
    total_steps: int
    warmup_fraction: float = 0.06

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must be in [0, 1)")
        if self.peak_lr <= 0:
            raise ValueError("peak_lr must be > 0")

    @property
    def warmup_steps(self) -> int:
        return math.ceil(self.warmup_fraction * self.total_steps)


def lr_at_step(step: int, schedule: LrSchedule) -> float:
    """Linear 0 -> peak over the warmup steps, then linear peak -> 0 at T."""
    t, w = schedule.total_steps, schedule.warmup_steps
    if step < 0 or step > t:
        raise ValueError(f"step {step} outside [0, {t}]")
    if w and step <= w:
        return schedule.peak_lr * step / w
    return schedule.peak_lr * (t - step) / (t - w)


class NonFiniteGradient(RuntimeError):
    pass


class AdamState:
    """First/second moments per named parameter plus the step counter."""

    def __init__(
        self,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.05,
        bias_correction: bool = True,
    ):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.bias_correction = bias_correction
        self.step_count = 0
        self.m: Dict[str, torch.Tensor] = {}
        self.v: Dict[str, torch.Tensor] = {}


def adam_step(
    params: Dict[str, torch.Tensor],
    grads: Dict[str, torch.Tensor],
    state: AdamState,
    lr: float,
) -> None:
    """One in-place update. Weight decay is decoupled and applies to every
    parameter passed in. Raises before touching anything on non-finite grads.
    """
    for name, g in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(
                f"{name}: grad shape {tuple(g.shape)} != param shape "
                f"{tuple(params[name].shape)}"
            )
        if not bool(torch.isfinite(g).all()):
            raise NonFiniteGradient(
                f"non-finite gradient for {name!r} at step {state.step_count + 1}"
            )
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = torch.zeros_like(p)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = torch.zeros_like(p)
            state.v[name] = torch.zeros_like(p)
        v = state.v[name]
        m.mul_(b1).add_(g, alpha=1 - b1)
        v.mul_(b2).addcmul_(g, g, value=1 - b2)
        if state.bias_correction:
            m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
        else:
            m_hat, v_hat = m, v
        with torch.no_grad():
            if state.weight_decay:
                p.mul_(1 - lr * state.weight_decay)
            p.sub_(lr * m_hat / (v_hat.sqrt() + state.eps))
