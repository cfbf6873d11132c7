"""Pre-training loop: determinism, curves, prefetch equality, divergence."""

import csv
import hashlib
import os
import random

import pytest
import torch

from morphlm.model.two_tier import load_model
from morphlm.pretrain.gradvac import TASKS, VaccineState
from morphlm.pretrain.loop import (
    PretrainHyper,
    masked_stem_accuracy,
    multitask_losses,
    pretrain_run,
    pretrain_step,
)
from morphlm.pretrain.masking import mask_batch


def _file_md5(path):
    with open(path, "rb") as f:
        return hashlib.md5(f.read()).hexdigest()


def _run(tiny_setup, out, steps=8, variant="bert", **kw):
    kw.setdefault("peak_lr", 1e-3)
    hyper = PretrainHyper(steps=steps, seed=3, batch_sentences=4, **kw)
    config = tiny_setup.config_for(variant)
    return pretrain_run(tiny_setup.sentences, config, hyper, str(out))


def test_run_writes_artifacts_and_history(tiny_setup, tmp_path):
    result = _run(tiny_setup, tmp_path / "run")
    assert os.path.exists(result.checkpoint_path)
    assert os.path.exists(result.config_path)
    assert len(result.history) == 8
    with open(result.curves_path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 8
    for column in ("step", "lr", "L_stem", "L_affix", "L_pos", "L_affixset"):
        assert column in rows[0]
    # cosine-target diagnostics for all six task pairs are recorded
    assert sum(1 for c in rows[0] if c.startswith("cos_target_")) == 6


def test_same_seed_reproduces_checkpoint_bitwise(tiny_setup, tmp_path):
    a = _run(tiny_setup, tmp_path / "a")
    b = _run(tiny_setup, tmp_path / "b")
    assert _file_md5(a.checkpoint_path) == _file_md5(b.checkpoint_path)
    assert a.history == b.history


def test_prefetch_changes_timing_not_results(tiny_setup, tmp_path):
    plain = _run(tiny_setup, tmp_path / "plain")
    ahead = _run(tiny_setup, tmp_path / "ahead", prefetch=3)
    assert _file_md5(plain.checkpoint_path) == _file_md5(ahead.checkpoint_path)
    assert plain.history == ahead.history


def test_gpt_variant_trains(tiny_setup, tmp_path):
    result = _run(tiny_setup, tmp_path / "gpt", variant="gpt")
    assert result.diverged_at is None
    assert all(torch.isfinite(torch.tensor(v)).item() for v in result.final_losses.values())


def test_divergence_keeps_last_good_checkpoint(tiny_setup, tmp_path):
    # an absurd learning rate reliably blows the losses up to inf
    result = _run(
        tiny_setup, tmp_path / "explode", steps=60, peak_lr=1e7,
        warmup_fraction=0.0, checkpoint_every=5,
    )
    assert result.diverged_at is not None
    assert os.path.exists(result.checkpoint_path)
    # what was saved still loads
    load_model(result.checkpoint_path, result.config_path)


def test_periodic_checkpoints_written(tiny_setup, tmp_path):
    result = _run(tiny_setup, tmp_path / "ck", steps=9, checkpoint_every=3)
    names = sorted(os.listdir(result.out_dir))
    assert "checkpoint_000003.ckpt" in names
    assert "checkpoint_000006.ckpt" in names
    assert "checkpoint_final.ckpt" in names


def test_step0_and_final_losses_come_from_history(tiny_setup, tmp_path):
    result = _run(tiny_setup, tmp_path / "h")
    assert set(result.step0_losses) == set(TASKS)
    assert result.step0_losses["stem"] == result.history[0]["L_stem"]
    assert result.final_losses["stem"] == result.history[-1]["L_stem"]


def test_losses_separate_per_task(tiny_setup):
    # the four losses respond to different targets: corrupt one target kind
    # and only that loss moves (heads are task-private at the loss level)
    config = tiny_setup.config
    from morphlm.model.two_tier import TwoTierModel, mlm_forward

    model = TwoTierModel(config, torch.Generator().manual_seed(0))
    batch = mask_batch(tiny_setup.sentences[:4], 0.3, random.Random(0))
    base = mlm_forward(batch, model)

    shifted = mask_batch(tiny_setup.sentences[:4], 0.3, random.Random(0))
    shifted.pos_targets = [(t + 1) % config.n_pos_tags for t in shifted.pos_targets]
    moved = mlm_forward(shifted, model)
    assert abs(float(moved.stem_loss.detach()) - float(base.stem_loss.detach())) < 1e-9
    assert abs(float(moved.affix_loss.detach()) - float(base.affix_loss.detach())) < 1e-9
    assert abs(float(moved.affix_set_loss.detach()) - float(base.affix_set_loss.detach())) < 1e-9
    assert abs(float(moved.pos_loss.detach()) - float(base.pos_loss.detach())) > 1e-6


def test_pretrain_step_applies_update(tiny_setup):
    from morphlm.model.two_tier import TwoTierModel
    from morphlm.pretrain.optim import AdamState

    model = TwoTierModel(tiny_setup.config, torch.Generator().manual_seed(0))
    before = {k: v.clone() for k, v in model.state_dict().items()}
    batch = mask_batch(tiny_setup.sentences[:4], 0.3, random.Random(0))
    losses, diags = pretrain_step(
        model, batch, VaccineState(len(TASKS), 0.01), AdamState(), 1e-3,
        random.Random(1),
    )
    assert set(losses) == set(TASKS)
    assert len(diags.adjusted) == len(TASKS)
    after = model.state_dict()
    changed = [k for k in before if not torch.equal(before[k], after[k])]
    assert changed  # the optimizer actually moved parameters


def test_masked_stem_accuracy_bounds(tiny_setup, pretrained):
    model = load_model(pretrained.checkpoint_path, pretrained.config_path)
    acc = masked_stem_accuracy(model, tiny_setup.sentences[:6])
    assert 0.0 <= acc <= 1.0


def test_empty_corpus_rejected(tiny_setup, tmp_path):
    with pytest.raises(ValueError):
        pretrain_run([], tiny_setup.config, PretrainHyper(steps=1), str(tmp_path))
