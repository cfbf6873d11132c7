"""Whole-word masking with the 80/10/10 corruption rule.

Words are selected i.i.d. at the configured rate; selected words are replaced
by the MASK word (stem/POS/affix-set set to MASK, affixes dropped) 80% of the
time, by a random word from the batch pool 10%, and kept unchanged 10%. Every
selected position carries the original four-slot targets. A sentence with no
selected word is resampled so the batch never yields zero masked positions.
"""

import random
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from ..tokenizer.vocab import MASK, MASK_ID, MorphoWord


@dataclass
class MaskedBatch:
    sentences: List[List[MorphoWord]]  # corrupted inputs
    positions: List[Tuple[int, int]]  # (sentence index, word index)
    stem_targets: List[int] = field(default_factory=list)
    affix_targets: List[Tuple[int, ...]] = field(default_factory=list)
    pos_targets: List[int] = field(default_factory=list)
    affix_set_targets: List[int] = field(default_factory=list)
    lengths: List[int] = field(default_factory=list)
    rate: float = 0.15


def _mask_word(original: MorphoWord) -> MorphoWord:
    return MorphoWord(
        surface=MASK,
        stem_id=MASK_ID,
        affix_ids=(),
        pos_tag_id=MASK_ID,
        affix_set_id=MASK_ID,
        word_index=original.word_index,
    )


def _random_word(original: MorphoWord, pool: Sequence[MorphoWord], rng: random.Random) -> MorphoWord:
    src = pool[rng.randrange(len(pool))]
    return MorphoWord(
        surface=src.surface,
        stem_id=src.stem_id,
        affix_ids=src.affix_ids,
        pos_tag_id=src.pos_tag_id,
        affix_set_id=src.affix_set_id,
        is_bpe_fallback=src.is_bpe_fallback,
        word_index=original.word_index,
    )


def mask_batch(
    sentences: Sequence[Sequence[MorphoWord]], rate: float, rng: random.Random
) -> MaskedBatch:
    if not 0.0 < rate < 1.0:
        raise ValueError("mask rate must be in (0, 1)")
    if not sentences or any(len(s) == 0 for s in sentences):
        raise ValueError("mask_batch needs nonempty sentences")
    pool = [w for s in sentences for w in s]
    batch = MaskedBatch(sentences=[], positions=[], rate=rate)
    for si, sent in enumerate(sentences):
        while True:
            selected = [wi for wi in range(len(sent)) if rng.random() < rate]
            if selected:
                break
        corrupted = list(sent)
        for wi in selected:
            original = sent[wi]
            u = rng.random()
            if u < 0.8:
                corrupted[wi] = _mask_word(original)
            elif u < 0.9:
                corrupted[wi] = _random_word(original, pool, rng)
            # else: keep unchanged
            batch.positions.append((si, wi))
            batch.stem_targets.append(original.stem_id)
            batch.affix_targets.append(tuple(original.affix_ids))
            batch.pos_targets.append(original.pos_tag_id)
            batch.affix_set_targets.append(original.affix_set_id)
        batch.sentences.append(corrupted)
        batch.lengths.append(len(sent))
    return batch
