"""The pre-training loop: mask -> forward -> four losses -> surgery -> Adam.

Per step, task gradients over the shared (non-head) parameters are extracted
separately, pass through gradient surgery, and are recombined; head gradients
bypass surgery (heads are task-private). Batches are pure functions of
(corpus, seed, step index), so the optional prefetch thread changes timing
but never results. Loss curves land in curves.csv, checkpoints in out_dir.
"""

import csv
import os
import queue
import random
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import torch

from ..model.config import ModelConfig
from ..model.two_tier import TwoTierModel, gpt_forward, mlm_forward, save_model
from ..tokenizer.vocab import MorphoWord
from .gradvac import TASKS, SurgeryDiagnostics, VaccineState, gradvac_combine
from .masking import MaskedBatch, mask_batch
from .optim import AdamState, LrSchedule, NonFiniteGradient, adam_step, lr_at_step

PAIR_ORDER = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
CURVE_COLUMNS = ["step", "lr", "L_stem", "L_affix", "L_pos", "L_affixset"] + [
    f"cos_target_{TASKS[i]}_{TASKS[j]}" for i, j in PAIR_ORDER
]


@dataclass
class PretrainHyper:
    steps: int = 500
    seed: int = 0
    batch_sentences: int = 8
    peak_lr: float = 1e-3
    warmup_fraction: float = 0.06
    weight_decay: float = 0.05
    bias_correction: bool = True
    mask_rate: float = 0.15
    vaccine_beta: float = 0.01
    dropout_seed_offset: int = 1
    checkpoint_every: int = 0  # 0 -> steps // 5
    prefetch: int = 0  # batches prepared ahead by a worker thread; 0 = off


@dataclass
class PretrainResult:
    out_dir: str
    checkpoint_path: str  # final, or last good one if training diverged
    config_path: str
    curves_path: str
    history: List[Dict[str, float]] = field(default_factory=list)
    diverged_at: Optional[int] = None

    @property
    def step0_losses(self) -> Dict[str, float]:
        return {k: self.history[0][f"L_{_col(k)}"] for k in TASKS}

    @property
    def final_losses(self) -> Dict[str, float]:
        return {k: self.history[-1][f"L_{_col(k)}"] for k in TASKS}


def _col(task: str) -> str:
    return "affixset" if task == "affix_set" else task


def multitask_losses(
    model: TwoTierModel,
    batch,
    dropout_generator: Optional[torch.Generator] = None,
) -> Dict[str, torch.Tensor]:
    """Four separate scalar losses for either variant.

    bert: batch is a MaskedBatch. gpt: batch is a list of sentences (each a
    list of MorphoWord, length >= 2); per-sentence losses are averaged.
    """
    if model.config.variant == "bert":
        out = mlm_forward(batch, model, dropout_generator)
        return out.losses()
    per_task: Dict[str, List[torch.Tensor]] = {t: [] for t in TASKS}
    for sentence in batch:
        out = gpt_forward(sentence, model, dropout_generator)
        for t, loss in out.losses().items():
            per_task[t].append(loss)
    return {t: torch.stack(v).mean() for t, v in per_task.items()}


def _batch_for_step(
    sentences: Sequence[List[MorphoWord]],
    variant: str,
    hyper: PretrainHyper,
    step: int,
):
    """Pure function of (corpus, seed, step): safe to build ahead of time."""
    rng = random.Random(hyper.seed * 1_000_003 + step)
    n = len(sentences)
    k = min(hyper.batch_sentences, n)
    picked = [sentences[i] for i in rng.sample(range(n), k)]
    if variant == "bert":
        return mask_batch(picked, hyper.mask_rate, rng)
    return picked


def _shared_and_head_params(model: TwoTierModel):
    head_names = set(model.head_parameter_names())
    shared: List[Tuple[str, torch.nn.Parameter]] = []
    heads: Dict[str, List[Tuple[str, torch.nn.Parameter]]] = {t: [] for t in TASKS}
    for name, p in model.named_parameters():
        if name not in head_names:
            shared.append((name, p))
            continue
        prefix = name.split(".")[0]
        for t in TASKS:
            if prefix == f"{t}_head":
                heads[t].append((name, p))
    return shared, heads


def _flatten(grads: Sequence[Optional[torch.Tensor]], params) -> torch.Tensor:
    chunks = []
    for g, (_, p) in zip(grads, params):
        chunks.append((torch.zeros_like(p) if g is None else g).reshape(-1))
    return torch.cat(chunks)


def _unflatten(vec: torch.Tensor, params) -> Dict[str, torch.Tensor]:
    out = {}
    offset = 0
    for name, p in params:
        n = p.numel()
        out[name] = vec[offset: offset + n].reshape(p.shape)
        offset += n
    return out


def pretrain_step(
    model: TwoTierModel,
    batch,
    vaccine: VaccineState,
    optim: AdamState,
    lr: float,
    step_rng: random.Random,
    dropout_generator: Optional[torch.Generator] = None,
) -> Tuple[Dict[str, float], SurgeryDiagnostics]:
    """One optimizer step; returns detached losses and surgery diagnostics."""
    losses = multitask_losses(model, batch, dropout_generator)
    loss_values = {t: float(losses[t].detach()) for t in TASKS}
    for t, v in loss_values.items():
        if not torch.isfinite(torch.tensor(v)):
            raise NonFiniteGradient(f"non-finite {t} loss {v!r}")
    shared, heads = _shared_and_head_params(model)
    shared_tensors = [p for _, p in shared]
    task_vectors = []
    head_grads: Dict[str, torch.Tensor] = {}
    for idx, t in enumerate(TASKS):
        head_params = heads[t]
        wanted = shared_tensors + [p for _, p in head_params]
        grads = torch.autograd.grad(
            losses[t],
            wanted,
            retain_graph=idx < len(TASKS) - 1,
            allow_unused=True,
        )
        task_vectors.append(_flatten(grads[: len(shared_tensors)], shared))
        for (name, p), g in zip(head_params, grads[len(shared_tensors):]):
            head_grads[name] = torch.zeros_like(p) if g is None else g
    combined, diags = gradvac_combine(task_vectors, vaccine, step_rng)
    all_grads = _unflatten(combined, shared)
    all_grads.update(head_grads)
    params = {name: p for name, p in model.named_parameters() if name in all_grads}
    adam_step(params, all_grads, optim, lr)
    return loss_values, diags


def pretrain_run(
    sentences: Sequence[List[MorphoWord]],
    config: ModelConfig,
    hyper: PretrainHyper,
    out_dir: str,
) -> PretrainResult:
    if not sentences:
        raise ValueError("empty corpus")
    if config.variant == "gpt":
        sentences = [s for s in sentences if len(s) >= 2]
        if not sentences:
            raise ValueError("gpt variant needs sentences with >= 2 words")
    # keep one slot free for CLS/EOS
    sentences = [s[: config.max_seq_len - 1] for s in sentences]
    os.makedirs(out_dir, exist_ok=True)
    config_path = os.path.join(out_dir, "model.config")
    curves_path = os.path.join(out_dir, "curves.csv")
    final_path = os.path.join(out_dir, "checkpoint_final.ckpt")

    model = TwoTierModel(config, torch.Generator().manual_seed(hyper.seed))
    dropout_gen = (
        torch.Generator().manual_seed(hyper.seed + hyper.dropout_seed_offset)
        if config.dropout > 0
        else None
    )
    vaccine = VaccineState(len(TASKS), hyper.vaccine_beta)
    optim = AdamState(
        weight_decay=hyper.weight_decay, bias_correction=hyper.bias_correction
    )
    schedule = LrSchedule(hyper.peak_lr, hyper.steps, hyper.warmup_fraction)
    every = hyper.checkpoint_every or max(1, hyper.steps // 5)

    def make_batch(step: int):
        return _batch_for_step(sentences, config.variant, hyper, step)

    batches = _BatchSource(make_batch, hyper.steps, hyper.prefetch)
    history: List[Dict[str, float]] = []
    last_good = ""
    diverged_at = None
    with open(curves_path, "w", newline="") as curves_file:
        writer = csv.writer(curves_file)
        writer.writerow(CURVE_COLUMNS)
        for step in range(hyper.steps):
            lr = lr_at_step(step, schedule)
            batch = batches.get(step)
            step_rng = random.Random(hyper.seed * 7_368_787 + step)
            try:
                loss_values, _ = pretrain_step(
                    model, batch, vaccine, optim, lr, step_rng, dropout_gen
                )
            except NonFiniteGradient:
                diverged_at = step
                break
            row = {"step": step, "lr": lr}
            for t in TASKS:
                row[f"L_{_col(t)}"] = loss_values[t]
            for i, j in PAIR_ORDER:
                row[f"cos_target_{TASKS[i]}_{TASKS[j]}"] = vaccine.target(i, j)
            history.append(row)
            writer.writerow([row[c] for c in CURVE_COLUMNS])
            if (step + 1) % every == 0 and step + 1 < hyper.steps:
                ck = os.path.join(out_dir, f"checkpoint_{step + 1:06d}.ckpt")
                save_model(model, ck, config_path, meta={"step": step + 1})
                last_good = ck
    batches.close()
    if diverged_at is None:
        save_model(model, final_path, config_path, meta={"step": hyper.steps})
        checkpoint = final_path
    else:
        # keep the last good periodic checkpoint; never overwrite it
        if not last_good:
            model_init = TwoTierModel(
                config, torch.Generator().manual_seed(hyper.seed)
            )
            last_good = os.path.join(out_dir, "checkpoint_000000.ckpt")
            save_model(model_init, last_good, config_path, meta={"step": 0})
        checkpoint = last_good
    return PretrainResult(
        out_dir=out_dir,
        checkpoint_path=checkpoint,
        config_path=config_path,
        curves_path=curves_path,
        history=history,
        diverged_at=diverged_at,
    )


class _BatchSource:
    """Hands out batches by step index, optionally prepared ahead by a thread."""

    def __init__(self, make_batch, total_steps: int, prefetch: int):
        self._make = make_batch
        if prefetch <= 0:
            self._queue = None
            return
        self._queue = queue.Queue(maxsize=prefetch)
        self._stop = threading.Event()

        def worker():
            for step in range(total_steps):
                if self._stop.is_set():
                    return
                item = (step, self._make(step))
                while not self._stop.is_set():
                    try:
                        self._queue.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue

        self._thread = threading.Thread(target=worker, daemon=True)
        self._thread.start()

    def get(self, step: int):
        if self._queue is None:
            return self._make(step)
        got_step, batch = self._queue.get()
        if got_step != step:
            raise RuntimeError(f"batch stream out of order: {got_step} != {step}")
        return batch

    def close(self):
        if self._queue is not None:
            self._stop.set()
            while True:
                try:
                    self._queue.get_nowait()
                except queue.Empty:
                    break
            self._thread.join(timeout=5)


def masked_stem_accuracy(model: TwoTierModel, sentences: Sequence[List[MorphoWord]]) -> float:
    """Fraction of positions whose stem is recovered when masked one at a time."""
    from .masking import _mask_word

    total, hits = 0, 0
    with torch.no_grad():
        for sent in sentences:
            for wi, original in enumerate(sent):
                corrupted = list(sent)
                corrupted[wi] = _mask_word(original)
                batch = MaskedBatch(
                    sentences=[corrupted],
                    positions=[(0, wi)],
                    stem_targets=[original.stem_id],
                    affix_targets=[tuple(original.affix_ids)],
                    pos_targets=[original.pos_tag_id],
                    affix_set_targets=[original.affix_set_id],
                    lengths=[len(sent)],
                )
                out = mlm_forward(batch, model)
                hits += int(int(out.stem_logits[0].argmax()) == original.stem_id)
                total += 1
    return hits / max(total, 1)
