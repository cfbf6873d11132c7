"""Fine-tuning tests: determinism, best-epoch selection, divergence handling."""

import hashlib

import pytest
import torch

from morphlm.finetune.data import make_examples, split_examples
from morphlm.finetune.trainer import (
    FinetuneHyper,
    FinetuneResult,
    classify_forward,
    clone_for_inference,
    evaluate_model,
    finetune_run,
    predict_probabilities,
)
from morphlm.model.two_tier import load_model


def _examples(tiny_setup, labeled_pairs):
    splits = split_examples(labeled_pairs, seed=0)
    train = make_examples(splits.train, splits.labels, tiny_setup.tokenize)
    dev = make_examples(splits.dev, splits.labels, tiny_setup.tokenize)
    return train, dev, splits.labels


def _quick_hyper(**kw):
    kw.setdefault("peak_lr", 3e-4)
    kw.setdefault("batch_size", 8)
    kw.setdefault("epochs", 2)
    kw.setdefault("dropout", 0.0)
    return FinetuneHyper(**kw)


def _run(tiny_setup, pretrained, labeled_pairs, **kw):
    train, dev, labels = _examples(tiny_setup, labeled_pairs)
    return finetune_run(
        train,
        dev,
        pretrained.checkpoint_path,
        pretrained.config_path,
        _quick_hyper(**kw),
        n_classes=len(labels),
        label_names=labels,
    )


def test_hyper_defaults_match_recommended_setting():
    hyper = FinetuneHyper()
    assert hyper.peak_lr == 2e-5
    assert hyper.batch_size == 16
    assert hyper.epochs == 30
    assert hyper.dropout == 0.1
    assert hyper.weight_decay == 0.05


def test_hyper_validation():
    with pytest.raises(ValueError):
        FinetuneHyper(peak_lr=0.0)
    with pytest.raises(ValueError):
        FinetuneHyper(batch_size=0)
    with pytest.raises(ValueError):
        FinetuneHyper(dropout=1.0)
    with pytest.raises(ValueError):
        FinetuneHyper(warmup_fraction=0.6)


def test_finetune_returns_result_with_history(tiny_setup, pretrained, labeled_pairs):
    result = _run(tiny_setup, pretrained, labeled_pairs)
    assert isinstance(result, FinetuneResult)
    assert len(result.history) == 2
    assert {"epoch", "train_loss", "dev_f1"} <= set(result.history[0])
    assert 0.0 <= result.dev_f1 <= 1.0
    assert result.best_epoch in (0, 1)
    assert result.warning is None


def test_same_seed_same_result(tiny_setup, pretrained, labeled_pairs):
    a = _run(tiny_setup, pretrained, labeled_pairs, seed=4)
    b = _run(tiny_setup, pretrained, labeled_pairs, seed=4)
    assert a.dev_f1 == b.dev_f1
    assert a.best_epoch == b.best_epoch
    assert a.history == b.history
    sa, sb = a.model.state_dict(), b.model.state_dict()
    assert sorted(sa) == sorted(sb)
    for k in sa:
        assert torch.equal(sa[k], sb[k]), k


def test_different_seed_changes_classifier_init(tiny_setup, pretrained, labeled_pairs):
    a = _run(tiny_setup, pretrained, labeled_pairs, seed=0)
    b = _run(tiny_setup, pretrained, labeled_pairs, seed=1)
    names = [n for n in a.model.state_dict() if "classifier" in n]
    assert names
    assert any(
        not torch.equal(a.model.state_dict()[n], b.model.state_dict()[n])
        for n in names
    )


def test_best_epoch_prefers_earlier_on_tie(tiny_setup, pretrained, labeled_pairs):
    # a strict improvement is required to move best_epoch, so a flat dev
    # curve must report the first epoch
    result = _run(tiny_setup, pretrained, labeled_pairs, peak_lr=1e-12, epochs=3)
    f1s = [h["dev_f1"] for h in result.history]
    assert max(f1s) == f1s[0]
    assert result.best_epoch == 0


def test_model_state_is_best_epoch_state(tiny_setup, pretrained, labeled_pairs):
    result = _run(tiny_setup, pretrained, labeled_pairs, epochs=3)
    train, dev, labels = _examples(tiny_setup, labeled_pairs)
    rescored = evaluate_model(result.model, dev, labels)
    assert rescored.weighted_f1 == pytest.approx(result.dev_f1, abs=1e-12)
    assert result.dev_f1 == max(h["dev_f1"] for h in result.history)


def test_pretrained_checkpoint_never_modified(tiny_setup, pretrained, labeled_pairs):
    with open(pretrained.checkpoint_path, "rb") as f:
        before = hashlib.md5(f.read()).hexdigest()
    _run(tiny_setup, pretrained, labeled_pairs)
    with open(pretrained.checkpoint_path, "rb") as f:
        after = hashlib.md5(f.read()).hexdigest()
    assert before == after


def test_divergence_returns_best_state_with_warning(
    tiny_setup, pretrained, labeled_pairs
):
    result = _run(
        tiny_setup, pretrained, labeled_pairs, peak_lr=1e12, epochs=4,
        warmup_fraction=0.0,
    )
    assert result.warning is not None and "diverged" in result.warning
    assert len(result.history) < 4 or result.best_epoch < 4
    # the returned model still evaluates to finite predictions
    train, dev, labels = _examples(tiny_setup, labeled_pairs)
    report = evaluate_model(result.model, dev, labels)
    assert 0.0 <= report.weighted_f1 <= 1.0


def test_finetune_writes_artifacts(tmp_path, tiny_setup, pretrained, labeled_pairs):
    train, dev, labels = _examples(tiny_setup, labeled_pairs)
    result = finetune_run(
        train,
        dev,
        pretrained.checkpoint_path,
        pretrained.config_path,
        _quick_hyper(),
        n_classes=len(labels),
        label_names=labels,
        out_dir=str(tmp_path / "run"),
    )
    assert result.checkpoint_path and result.config_path
    reloaded = load_model(result.checkpoint_path, result.config_path)
    got = evaluate_model(reloaded, dev, labels)
    assert got.weighted_f1 == pytest.approx(result.dev_f1, abs=1e-12)


def test_finetune_validates_inputs(tiny_setup, pretrained, labeled_pairs):
    train, dev, labels = _examples(tiny_setup, labeled_pairs)
    with pytest.raises(ValueError):
        finetune_run(
            [], dev, pretrained.checkpoint_path, pretrained.config_path,
            _quick_hyper(), n_classes=len(labels),
        )
    with pytest.raises(ValueError, match="out of range"):
        finetune_run(
            train, dev, pretrained.checkpoint_path, pretrained.config_path,
            _quick_hyper(), n_classes=1,
        )


def test_classify_forward_readout_depends_on_variant(tiny_setup, pretrained):
    words = tiny_setup.tokenize("ba ka ba")
    gen = torch.Generator().manual_seed(0)
    model = load_model(pretrained.checkpoint_path, pretrained.config_path)
    model.attach_classifier(3, gen)
    logits = classify_forward(words, model)
    assert logits.shape == (3,)
    states = model.encode_sequence(list(words))
    want = model.classifier(states[0])  # bert reads the CLS row
    assert torch.equal(logits, want)


def test_classify_forward_gpt_reads_last_state(tiny_setup):
    from morphlm.model.two_tier import TwoTierModel

    cfg = tiny_setup.config_for("gpt")
    model = TwoTierModel(cfg, torch.Generator().manual_seed(1))
    model.attach_classifier(2, torch.Generator().manual_seed(2))
    words = tiny_setup.tokenize("ba ka ba")
    logits = classify_forward(words, model)
    states = model.encode_sequence(list(words))
    assert torch.equal(logits, model.classifier(states[-1]))


def test_classify_forward_requires_classifier(tiny_setup, pretrained):
    model = load_model(pretrained.checkpoint_path, pretrained.config_path)
    with pytest.raises(ValueError, match="classifier"):
        classify_forward(tiny_setup.tokenize("ba"), model)


def test_predict_probabilities_sum_to_one(tiny_setup, pretrained, labeled_pairs):
    result = _run(tiny_setup, pretrained, labeled_pairs)
    probs = predict_probabilities(tiny_setup.tokenize("ba ka"), result.model)
    assert len(probs) == len(result.dev_report.support)
    assert sum(probs) == pytest.approx(1.0, abs=1e-6)
    assert all(p >= 0 for p in probs)


def test_clone_for_inference_is_independent(tiny_setup, pretrained, labeled_pairs):
    result = _run(tiny_setup, pretrained, labeled_pairs)
    clone = clone_for_inference(result)
    words = tiny_setup.tokenize("ba ka")
    assert predict_probabilities(words, clone) == predict_probabilities(
        words, result.model
    )
    with torch.no_grad():
        result.model.classifier.out.weight[0].add_(1.0)
    assert predict_probabilities(words, clone) != predict_probabilities(
        words, result.model
    )
