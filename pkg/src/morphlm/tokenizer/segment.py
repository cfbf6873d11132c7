"""Text -> word-aligned MorphoWord sequences.

Each whitespace word either gets one record from the morphological analyzer
or, when unanalyzable, one record per BPE piece with pieces treated as
affixless stems under a reserved POS tag. Output order follows input order
and word_index ties every record back to its source word.
"""

import json
from typing import IO, Iterable, List, Optional, Union

from .bpe import BpeModel
from .emoji import EmojiTable, emoji_verbalize, load_default_emoji_table
from .grammar import best_analysis
from .vocab import (
    BPE_TAG_ID,
    EMPTY_SET_ID,
    MorphoWord,
    VocabularySet,
)


def bpe_fallback_encode(
    word: str, vocabs: VocabularySet, bpe: BpeModel, word_index: int = 0
) -> List[MorphoWord]:
    """One affixless MorphoWord per BPE piece; unseen pieces map to UNK."""
    words = []
    for piece in bpe.encode_word(word):
        words.append(
            MorphoWord(
                surface=piece,
                stem_id=vocabs.stems.id_of(piece),
                affix_ids=(),
                pos_tag_id=BPE_TAG_ID,
                affix_set_id=EMPTY_SET_ID,
                is_bpe_fallback=True,
                word_index=word_index,
            )
        )
    return words


def segment_text(
    text: str,
    analyzer,
    vocabs: VocabularySet,
    bpe: BpeModel,
    verbalize_emoji: bool = False,
    emoji_table: Optional[EmojiTable] = None,
) -> List[MorphoWord]:
    """Segment text into MorphoWord records, one group per whitespace word.

    analyzer is anything with analyze_batch(words) -> list of responses
    (toy grammar analyzer or the REST client).
    """
    if verbalize_emoji:
        table = emoji_table if emoji_table is not None else load_default_emoji_table()
        text = emoji_verbalize(text, table)
    tokens = text.split()
    if not tokens:
        return []
    out: List[MorphoWord] = []
    for w, (word, response) in enumerate(zip(tokens, analyzer.analyze_batch(tokens))):
        analysis = best_analysis(response)
        if analysis is None:
            out.extend(bpe_fallback_encode(word, vocabs, bpe, word_index=w))
            continue
        affix_ids = tuple(vocabs.affixes.id_of(a) for a in analysis.affixes)
        out.append(
            MorphoWord(
                surface=word,
                stem_id=vocabs.stems.id_of(analysis.stem),
                affix_ids=affix_ids,
                pos_tag_id=vocabs.pos_tags.id_of(analysis.pos),
                affix_set_id=vocabs.intern_affix_set(affix_ids),
                word_index=w,
            )
        )
    return out


def words_to_jsonl(
    sentences: Iterable[List[MorphoWord]], dest: Union[str, IO[str]]
) -> None:
    """Write one JSON array of MorphoWord records per line (one sentence)."""

    def _write(f: IO[str]) -> None:
        for sentence in sentences:
            line = json.dumps(
                [w.to_json() for w in sentence],
                ensure_ascii=False,
                separators=(",", ":"),
            )
            f.write(line + "\n")

    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8") as f:
            _write(f)
    else:
        _write(dest)


def words_from_jsonl(src: Union[str, IO[str]]) -> List[List[MorphoWord]]:
    """Read sentences written by words_to_jsonl; blank lines are skipped."""

    def _read(f: IO[str]) -> List[List[MorphoWord]]:
        sentences = []
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                records = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"corpus line {lineno}: {e}") from None
            sentences.append([MorphoWord.from_json(d) for d in records])
        return sentences

    if isinstance(src, str):
        with open(src, "r", encoding="utf-8") as f:
            return _read(f)
    return _read(src)
