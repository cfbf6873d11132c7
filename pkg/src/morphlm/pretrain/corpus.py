"""Synthetic agglutinative language: the desk-scale stand-in corpus.

Generates a random CV-syllable grammar (stems with POS tags, closed
prefix/suffix inventories), sentences over it, and sentiment labels planted
via marker stems, so pre-training and fine-tuning have learnable structure.
Everything is driven by explicit seeds.
"""

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from ..tokenizer.bpe import BpeModel
from ..tokenizer.grammar import Analysis, Grammar, ToyAnalyzer, best_analysis
from ..tokenizer.vocab import (
    BPE_TAG_ID,
    EMPTY_SET_ID,
    MorphoWord,
    VocabularySet,
    affix_set_key,
)

_CONSONANTS = "bdgkmnrstz"
_VOWELS = "aeiou"
_POS_TAGS = ("V", "N", "ADJ", "ADV")
LABELS = ("negative", "neutral", "positive")


def _syllable(rng: random.Random) -> str:
    return rng.choice(_CONSONANTS) + rng.choice(_VOWELS)


class SyntheticLanguage:
    """Random grammar + sentence sampler + planted sentiment rule."""

    def __init__(
        self,
        seed: int,
        n_stems: int = 48,
        n_prefixes: int = 8,
        n_suffixes: int = 8,
    ):
        rng = random.Random(seed)
        self.grammar = Grammar()
        stems = set()
        while len(stems) < n_stems:
            stems.add(_syllable(rng) + _syllable(rng) + (_syllable(rng) if rng.random() < 0.4 else ""))
        self.stems = sorted(stems)
        for s in self.stems:
            self.grammar.add_stem(s, rng.choice(_POS_TAGS))
        # CVV shapes keep affixes distinct from the CV-syllable stems
        cvv = [c + v1 + v2 for c in _CONSONANTS for v1 in _VOWELS for v2 in _VOWELS]
        affixes = rng.sample(cvv, n_prefixes + n_suffixes)
        self.grammar.prefixes = set(affixes[:n_prefixes])
        self.grammar.suffixes = set(affixes[n_prefixes:])
        self.analyzer = ToyAnalyzer(self.grammar)
        # planted sentiment: marker stems vote, majority decides the label
        markers = rng.sample(self.stems, 8)
        self.positive_stems = set(markers[:4])
        self.negative_stems = set(markers[4:])
        self._numbers = [str(rng.randint(10, 9999)) for _ in range(16)]
        # fixed stem cycle: chained sentences walk it, so context determines
        # each stem and masked-stem prediction is inference, not memorization
        self._chain = rng.sample(self.stems, len(self.stems))

    def word(self, rng: random.Random, stem: Optional[str] = None) -> str:
        if stem is None:
            stem = rng.choice(self.stems)
        w = stem
        if rng.random() < 0.5:
            w = rng.choice(sorted(self.grammar.prefixes)) + w
        if rng.random() < 0.35:
            w = w + rng.choice(sorted(self.grammar.suffixes))
        return w

    def sentence(
        self,
        rng: random.Random,
        min_words: int = 3,
        max_words: int = 9,
        number_rate: float = 0.06,
        chained: bool = False,
    ) -> str:
        n = rng.randint(min_words, max_words)
        out = []
        pos = rng.randrange(len(self._chain))
        for _ in range(n):
            if rng.random() < number_rate:
                out.append(rng.choice(self._numbers))  # unanalyzable, BPE route
            elif chained:
                out.append(self.word(rng, self._chain[pos % len(self._chain)]))
                pos += 1
            else:
                out.append(self.word(rng))
        return " ".join(out)

    def sentences(
        self,
        n: int,
        seed: int,
        min_words: int = 3,
        max_words: int = 9,
        number_rate: float = 0.06,
        chained: bool = False,
    ) -> List[str]:
        rng = random.Random(seed)
        return [
            self.sentence(rng, min_words, max_words, number_rate, chained)
            for _ in range(n)
        ]

    def labeled_sentence(self, rng: random.Random) -> Tuple[str, str]:
        """Sentence plus its planted sentiment label."""
        n = rng.randint(3, 9)
        words, score = [], 0
        for _ in range(n):
            r = rng.random()
            if r < 0.22:
                stem = rng.choice(sorted(self.positive_stems))
                score += 1
            elif r < 0.44:
                stem = rng.choice(sorted(self.negative_stems))
                score -= 1
            else:
                stem = rng.choice(self.stems)
                stem_set = {stem}
                score += len(stem_set & self.positive_stems)
                score -= len(stem_set & self.negative_stems)
            words.append(self.word(rng, stem))
        label = "positive" if score > 0 else "negative" if score < 0 else "neutral"
        return " ".join(words), label

    def labeled_sentences(self, n: int, seed: int) -> List[Tuple[str, str]]:
        rng = random.Random(seed)
        return [self.labeled_sentence(rng) for _ in range(n)]


@dataclass(frozen=True)
class AnalyzedWord:
    """Per-word analyzer outcome: an analysis, or BPE pieces when none."""

    surface: str
    analysis: Optional[Analysis]
    pieces: Tuple[str, ...] = ()


def analyze_corpus(
    raw_sentences: Iterable[str], analyzer, bpe: BpeModel
) -> List[List[AnalyzedWord]]:
    out = []
    for line in raw_sentences:
        words = line.split()
        sent = []
        for word, resp in zip(words, analyzer.analyze_batch(words)):
            a = best_analysis(resp)
            if a is None:
                sent.append(AnalyzedWord(word, None, tuple(bpe.encode_word(word))))
            else:
                sent.append(AnalyzedWord(word, a))
        out.append(sent)
    return out


def build_vocabularies(
    corpus: Sequence[List[AnalyzedWord]],
    stem_cutoff: int = 1,
    affix_cutoff: int = 1,
    pos_cutoff: int = 1,
    affix_set_min_freq: int = 2,
) -> VocabularySet:
    """Frequency-then-lexicographic vocabularies with reserved ids.

    Tokens below their cutoff map to UNK; BPE pieces count as stems. Affix
    sets are interned as canonical sorted-id keys when the exact multiset
    occurs at least affix_set_min_freq times.
    """
    if not any(corpus):
        raise ValueError("empty corpus: nothing to build vocabularies from")
    stem_counts: Counter = Counter()
    affix_counts: Counter = Counter()
    pos_counts: Counter = Counter()
    for sent in corpus:
        for w in sent:
            if w.analysis is None:
                stem_counts.update(w.pieces)
            else:
                stem_counts[w.analysis.stem] += 1
                affix_counts.update(w.analysis.affixes)
                pos_counts[w.analysis.pos] += 1

    vocabs = VocabularySet()

    def fill(vocab, counts: Counter, cutoff: int) -> None:
        kept = [(tok, c) for tok, c in counts.items() if c >= cutoff]
        for tok, _ in sorted(kept, key=lambda kv: (-kv[1], kv[0])):
            vocab.add(tok)

    fill(vocabs.stems, stem_counts, stem_cutoff)
    fill(vocabs.affixes, affix_counts, affix_cutoff)
    fill(vocabs.pos_tags, pos_counts, pos_cutoff)

    set_counts: Counter = Counter()
    for sent in corpus:
        for w in sent:
            if w.analysis is not None and w.analysis.affixes:
                ids = [vocabs.affixes.id_of(a) for a in w.analysis.affixes]
                set_counts[affix_set_key(ids)] += 1
    kept_sets = [(k, c) for k, c in set_counts.items() if c >= affix_set_min_freq]
    for key, _ in sorted(kept_sets, key=lambda kv: (-kv[1], kv[0])):
        vocabs.affix_sets.add(key)
    return vocabs


def to_morpho_words(
    corpus: Sequence[List[AnalyzedWord]], vocabs: VocabularySet
) -> List[List[MorphoWord]]:
    """Map analyzed sentences onto vocabulary ids (same rules as segment_text)."""
    out = []
    for sent in corpus:
        mapped: List[MorphoWord] = []
        for w_idx, w in enumerate(sent):
            if w.analysis is None:
                for piece in w.pieces:
                    mapped.append(
                        MorphoWord(
                            surface=piece,
                            stem_id=vocabs.stems.id_of(piece),
                            affix_ids=(),
                            pos_tag_id=BPE_TAG_ID,
                            affix_set_id=EMPTY_SET_ID,
                            is_bpe_fallback=True,
                            word_index=w_idx,
                        )
                    )
                continue
            affix_ids = tuple(vocabs.affixes.id_of(a) for a in w.analysis.affixes)
            mapped.append(
                MorphoWord(
                    surface=w.surface,
                    stem_id=vocabs.stems.id_of(w.analysis.stem),
                    affix_ids=affix_ids,
                    pos_tag_id=vocabs.pos_tags.id_of(w.analysis.pos),
                    affix_set_id=vocabs.intern_affix_set(affix_ids),
                    word_index=w_idx,
                )
            )
        out.append(mapped)
    return out
