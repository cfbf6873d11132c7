"""Classification fine-tuning of a pre-trained two-tier model."""

import copy
import math
import os
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import torch

from ..model.two_tier import TwoTierModel, load_model, save_model
from ..nn.ops import softmax_cross_entropy
from ..pretrain.optim import AdamState, LrSchedule, NonFiniteGradient, adam_step, lr_at_step
from ..tokenizer.vocab import MorphoWord
from .data import LabeledExample
from .metrics import EvalReport, evaluate_labels


@dataclass
class FinetuneHyper:
    """Fine-tuning configuration. Defaults are the winning setting:
    peak lr 2e-5, batch 16, 30 epochs, dropout 0.1, weight decay 0.05."""

    peak_lr: float = 2e-5
    batch_size: int = 16
    epochs: int = 30
    dropout: float = 0.1
    weight_decay: float = 0.05
    warmup_fraction: float = 0.06
    seed: int = 0

    def __post_init__(self):
        if self.peak_lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("peak_lr, batch_size and epochs must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0.0 <= self.warmup_fraction <= 0.5:
            raise ValueError("warmup_fraction must be in [0, 0.5]")

    def key(self) -> Tuple[int, float, int]:
        """Lexicographic identity used to break ranking ties."""
        return (self.batch_size, self.peak_lr, self.epochs)


def classify_forward(
    words: Sequence[MorphoWord],
    model: TwoTierModel,
    dropout_generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Class logits for one example.

    bert reads out the final CLS state (row 0); gpt reads out the final
    state at the appended EOS prompt token (last row).
    """
    if model.classifier is None:
        raise ValueError("model has no classifier head attached")
    if not words:
        raise ValueError("cannot classify an empty tokenization")
    states = model.encode_sequence(list(words), dropout_generator)
    readout = states[0] if model.config.variant == "bert" else states[-1]
    return model.classifier(readout)


def predict_probabilities(
    words: Sequence[MorphoWord], model: TwoTierModel
) -> List[float]:
    """Softmax class probabilities for one example (no dropout)."""
    with torch.no_grad():
        logits = classify_forward(words, model)
        return torch.softmax(logits, dim=-1).tolist()


def evaluate_model(
    model: TwoTierModel,
    examples: Sequence[LabeledExample],
    label_names: Optional[List[str]] = None,
) -> EvalReport:
    """Argmax predictions over a labeled set, scored as an EvalReport."""
    if model.classifier is None:
        raise ValueError("model has no classifier head attached")
    n_classes = model.classifier.out.out_features
    gold, pred = [], []
    with torch.no_grad():
        for ex in examples:
            logits = classify_forward(ex.tokenized, model)
            pred.append(int(torch.argmax(logits).item()))
            gold.append(ex.label)
    return evaluate_labels(gold, pred, n_classes=n_classes, label_names=label_names)


@dataclass
class FinetuneResult:
    model: TwoTierModel
    dev_report: EvalReport
    best_epoch: int
    history: List[Dict[str, float]] = field(default_factory=list)
    warning: Optional[str] = None
    checkpoint_path: Optional[str] = None
    config_path: Optional[str] = None

    @property
    def dev_f1(self) -> float:
        return self.dev_report.weighted_f1


def _set_dropout(model: TwoTierModel, rate: float) -> None:
    for layer in list(model.tier1_layers) + list(model.tier2_layers):
        layer.dropout = rate


def _batch_loss(
    model: TwoTierModel,
    batch: Sequence[LabeledExample],
    dropout_generator: Optional[torch.Generator],
) -> torch.Tensor:
    logits = torch.stack(
        [classify_forward(ex.tokenized, model, dropout_generator) for ex in batch]
    )
    targets = torch.tensor([ex.label for ex in batch], dtype=torch.long)
    return softmax_cross_entropy(logits, targets)


def finetune_run(
    train: Sequence[LabeledExample],
    dev: Sequence[LabeledExample],
    checkpoint_path: str,
    config_path: str,
    hyper: FinetuneHyper,
    n_classes: int,
    label_names: Optional[List[str]] = None,
    out_dir: Optional[str] = None,
) -> FinetuneResult:
    """Cross-entropy fine-tuning with linear warmup/decay over all steps.

    Evaluates dev each epoch and returns the epoch checkpoint with the best
    dev weighted F1 (earliest epoch on ties). The pre-trained checkpoint
    file is only read, never written. Divergence stops training and returns
    the best state so far with a warning.
    """
    if not train or not dev:
        raise ValueError("train and dev must both be nonempty")
    for ex in list(train) + list(dev):
        if ex.label >= n_classes:
            raise ValueError(f"label {ex.label} out of range for {n_classes} classes")

    model = load_model(checkpoint_path, config_path)
    model.attach_classifier(n_classes, torch.Generator().manual_seed(hyper.seed))
    _set_dropout(model, hyper.dropout)
    dropout_generator = None
    if hyper.dropout > 0:
        dropout_generator = torch.Generator().manual_seed(hyper.seed + 1)

    params = dict(model.named_parameters())
    optim = AdamState(weight_decay=hyper.weight_decay)
    batches_per_epoch = math.ceil(len(train) / hyper.batch_size)
    schedule = LrSchedule(
        peak_lr=hyper.peak_lr,
        total_steps=hyper.epochs * batches_per_epoch,
        warmup_fraction=hyper.warmup_fraction,
    )

    rng = random.Random(hyper.seed)
    order = list(range(len(train)))
    best_state: Optional[Dict[str, torch.Tensor]] = None
    best_report: Optional[EvalReport] = None
    best_epoch = -1
    history: List[Dict[str, float]] = []
    warning = None
    step = 0

    for epoch in range(hyper.epochs):
        rng.shuffle(order)
        epoch_loss, stop = 0.0, False
        for b in range(batches_per_epoch):
            batch = [train[i] for i in order[b * hyper.batch_size : (b + 1) * hyper.batch_size]]
            model.zero_grad(set_to_none=True)
            loss = _batch_loss(model, batch, dropout_generator)
            if not torch.isfinite(loss):
                warning = f"diverged at epoch {epoch} step {step}: non-finite loss"
                stop = True
                break
            loss.backward()
            grads = {n: p.grad for n, p in params.items() if p.grad is not None}
            step += 1
            try:
                adam_step(params, grads, optim, lr_at_step(step, schedule))
            except NonFiniteGradient as err:
                warning = f"diverged at epoch {epoch} step {step}: {err}"
                stop = True
                break
            epoch_loss += float(loss.detach())
        report = evaluate_model(model, dev, label_names)
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / max(1, batches_per_epoch),
                "dev_f1": report.weighted_f1,
            }
        )
        if best_report is None or report.weighted_f1 > best_report.weighted_f1:
            best_report = report
            best_epoch = epoch
            best_state = {
                k: v.detach().clone() for k, v in model.state_dict().items()
            }
        if stop:
            break

    model.load_state_dict(best_state)
    result = FinetuneResult(
        model=model,
        dev_report=best_report,
        best_epoch=best_epoch,
        history=history,
        warning=warning,
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        ckpt = os.path.join(out_dir, "finetuned.ckpt")
        cfg = os.path.join(out_dir, "finetuned.config")
        meta = {"n_classes": n_classes, "best_epoch": best_epoch}
        if label_names:
            meta["label_names"] = list(label_names)
        save_model(model, ckpt, cfg, meta=meta)
        result.checkpoint_path = ckpt
        result.config_path = cfg
    return result


def clone_for_inference(result: FinetuneResult) -> TwoTierModel:
    """Deep copy of the fine-tuned model, safe to hand to another consumer."""
    return copy.deepcopy(result.model)
