"""Whole-word masking: selection rate, corruption mix, target alignment."""

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphlm.pretrain.masking import mask_batch
from morphlm.tokenizer.vocab import MASK_ID, MorphoWord


def _word(stem, idx):
    return MorphoWord(
        surface=f"w{stem}", stem_id=stem, affix_ids=(stem % 3,),
        pos_tag_id=5 + stem % 2, affix_set_id=4 + stem % 4, word_index=idx,
    )


def _sentences(n, length=8):
    return [
        [_word(5 + (s * length + i) % 17, i) for i in range(length)]
        for s in range(n)
    ]


def test_positions_aligned_with_targets():
    sentences = _sentences(6)
    batch = mask_batch(sentences, 0.3, random.Random(0))
    assert len(batch.positions) == len(batch.stem_targets)
    for (si, wi), stem, affixes, pos, aset in zip(
        batch.positions,
        batch.stem_targets,
        batch.affix_targets,
        batch.pos_targets,
        batch.affix_set_targets,
    ):
        original = sentences[si][wi]
        assert stem == original.stem_id
        assert affixes == tuple(original.affix_ids)
        assert pos == original.pos_tag_id
        assert aset == original.affix_set_id


def test_originals_never_mutated():
    sentences = _sentences(4)
    snapshot = [list(s) for s in sentences]
    mask_batch(sentences, 0.4, random.Random(1))
    assert sentences == snapshot


def test_every_sentence_has_a_masked_position():
    batch = mask_batch(_sentences(50, length=3), 0.15, random.Random(2))
    covered = {si for si, _ in batch.positions}
    assert covered == set(range(50))


def test_selection_rate_within_3_sigma():
    # resampling empty selections inflates the rate for short sentences, so
    # use long ones where the adjustment is negligible
    n_words = 400 * 20
    batch = mask_batch(_sentences(400, length=20), 0.15, random.Random(3))
    k = len(batch.positions)
    mean = n_words * 0.15
    sigma = (n_words * 0.15 * 0.85) ** 0.5
    assert abs(k - mean) < 3 * sigma


def test_corruption_mix_is_80_10_10():
    sentences = _sentences(600, length=12)
    batch = mask_batch(sentences, 0.2, random.Random(4))
    outcomes = Counter()
    for (si, wi) in batch.positions:
        original = sentences[si][wi]
        corrupted = batch.sentences[si][wi]
        if corrupted.stem_id == MASK_ID and corrupted.pos_tag_id == MASK_ID:
            outcomes["mask"] += 1
        elif corrupted == original:
            outcomes["keep"] += 1
        else:
            outcomes["random"] += 1
    total = sum(outcomes.values())
    assert abs(outcomes["mask"] / total - 0.8) < 0.05
    assert abs(outcomes["random"] / total - 0.1) < 0.04
    assert abs(outcomes["keep"] / total - 0.1) < 0.04


def test_masked_word_keeps_position_and_drops_affixes():
    sentences = _sentences(20)
    batch = mask_batch(sentences, 0.5, random.Random(5))
    for (si, wi) in batch.positions:
        corrupted = batch.sentences[si][wi]
        assert corrupted.word_index == sentences[si][wi].word_index
        if corrupted.stem_id == MASK_ID:
            assert corrupted.affix_ids == ()
            assert corrupted.affix_set_id == MASK_ID


def test_random_replacement_comes_from_batch_pool():
    sentences = _sentences(30, length=10)
    pool = {w.stem_id for s in sentences for w in s}
    batch = mask_batch(sentences, 0.3, random.Random(6))
    for (si, wi) in batch.positions:
        corrupted = batch.sentences[si][wi]
        if corrupted.stem_id != MASK_ID:
            assert corrupted.stem_id in pool


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        mask_batch([], 0.15, random.Random(0))
    with pytest.raises(ValueError):
        mask_batch([[]], 0.15, random.Random(0))
    with pytest.raises(ValueError):
        mask_batch(_sentences(1), 0.0, random.Random(0))
    with pytest.raises(ValueError):
        mask_batch(_sentences(1), 1.0, random.Random(0))


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    rate=st.floats(0.05, 0.6),
    n=st.integers(1, 12),
    length=st.integers(1, 9),
)
def test_mask_batch_structure_invariants(seed, rate, n, length):
    sentences = _sentences(n, length=length)
    batch = mask_batch(sentences, rate, random.Random(seed))
    assert len(batch.sentences) == n
    assert all(len(a) == len(b) for a, b in zip(batch.sentences, sentences))
    assert batch.positions == sorted(set(batch.positions))
    assert {si for si, _ in batch.positions} == set(range(n))
    assert batch.lengths == [length] * n
