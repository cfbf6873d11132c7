"""Vocabularies and the per-word morphology record.

Every word is represented by four slots: a stem, a (possibly empty) list of
affixes, a POS tag, and the interned identity of the whole affix multiset.
Each slot draws from its own vocabulary with fixed reserved ids.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

# Reserved symbols. Ids are fixed: PAD=0, UNK=1, MASK=2 in every vocabulary.
PAD = "<pad>"
UNK = "<unk>"
MASK = "<mask>"
# Stem vocabulary additionally reserves CLS=3 and EOS=4 (special word slots).
CLS = "<cls>"
EOS = "<eos>"
# POS vocabulary reserves a tag for BPE fallback pieces at id 3.
BPE_TAG = "<bpe>"
# Affix-set vocabulary reserves the empty set at id 3.
EMPTY_SET = "<empty>"

PAD_ID = 0
UNK_ID = 1
MASK_ID = 2
CLS_ID = 3
EOS_ID = 4
BPE_TAG_ID = 3
EMPTY_SET_ID = 3


def affix_set_key(affix_ids: Sequence[int]) -> str:
    """Canonical key for an affix multiset: sorted ids joined by '+'."""
    if not affix_ids:
        return EMPTY_SET
    return "+".join(str(i) for i in sorted(affix_ids))


def affix_set_key_to_ids(key: str) -> Tuple[int, ...]:
    """Inverse of affix_set_key for non-reserved keys."""
    if key == EMPTY_SET:
        return ()
    return tuple(int(p) for p in key.split("+"))


class Vocab:
    """Bijective text<->index map with reserved leading ids."""

    def __init__(self, reserved: Sequence[str]):
        self._tokens: List[str] = list(reserved)
        self._index: Dict[str, int] = {t: i for i, t in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("duplicate reserved tokens")
        self.n_reserved = len(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def add(self, token: str) -> int:
        """Intern a token, returning its id. Reserved ids are never reassigned."""
        idx = self._index.get(token)
        if idx is None:
            idx = len(self._tokens)
            self._tokens.append(token)
            self._index[token] = idx
        return idx

    def id_of(self, token: str) -> int:
        """Id for token, UNK_ID if absent."""
        return self._index.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def tokens(self) -> List[str]:
        return list(self._tokens)

    def to_dict(self) -> dict:
        return {"reserved": self.n_reserved, "tokens": self._tokens}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocab":
        v = cls(d["tokens"][: d["reserved"]])
        for t in d["tokens"][d["reserved"]:]:
            v.add(t)
        return v


def stem_vocab() -> Vocab:
    return Vocab([PAD, UNK, MASK, CLS, EOS])


def affix_vocab() -> Vocab:
    return Vocab([PAD, UNK, MASK])


def pos_vocab() -> Vocab:
    return Vocab([PAD, UNK, MASK, BPE_TAG])


def affix_set_vocab() -> Vocab:
    return Vocab([PAD, UNK, MASK, EMPTY_SET])


@dataclass
class VocabularySet:
    """The four frozen vocabularies a model predicts over.

    affix_sets keys are canonical sorted affix-id strings (see affix_set_key);
    the empty multiset is the reserved EMPTY_SET entry.
    """

    stems: Vocab = field(default_factory=stem_vocab)
    affixes: Vocab = field(default_factory=affix_vocab)
    pos_tags: Vocab = field(default_factory=pos_vocab)
    affix_sets: Vocab = field(default_factory=affix_set_vocab)

    def sizes(self) -> Dict[str, int]:
        return {
            "stems": len(self.stems),
            "affixes": len(self.affixes),
            "pos_tags": len(self.pos_tags),
            "affix_sets": len(self.affix_sets),
        }

    def intern_affix_set(self, affix_ids: Sequence[int]) -> int:
        """Id of the affix multiset; UNK if the set was not seen at build time."""
        if not affix_ids:
            return EMPTY_SET_ID
        return self.affix_sets.id_of(affix_set_key(affix_ids))

    def save(self, path: str) -> None:
        doc = {
            "stems": self.stems.to_dict(),
            "affixes": self.affixes.to_dict(),
            "pos_tags": self.pos_tags.to_dict(),
            "affix_sets": self.affix_sets.to_dict(),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path: str) -> "VocabularySet":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        return cls(
            stems=Vocab.from_dict(doc["stems"]),
            affixes=Vocab.from_dict(doc["affixes"]),
            pos_tags=Vocab.from_dict(doc["pos_tags"]),
            affix_sets=Vocab.from_dict(doc["affix_sets"]),
        )


@dataclass(frozen=True)
class MorphoWord:
    """One word as four morphology slots plus provenance.

    word_index groups BPE fallback pieces back to their source whitespace word.
    is_bpe_fallback implies affix_ids is empty and affix_set_id is EMPTY_SET.
    """

    surface: str
    stem_id: int
    affix_ids: Tuple[int, ...]
    pos_tag_id: int
    affix_set_id: int
    is_bpe_fallback: bool = False
    word_index: int = 0

    def validate(self, vocabs: VocabularySet) -> None:
        if not (0 <= self.stem_id < len(vocabs.stems)):
            raise ValueError(f"stem_id {self.stem_id} out of range")
        for a in self.affix_ids:
            if not (0 <= a < len(vocabs.affixes)):
                raise ValueError(f"affix_id {a} out of range")
        if not (0 <= self.pos_tag_id < len(vocabs.pos_tags)):
            raise ValueError(f"pos_tag_id {self.pos_tag_id} out of range")
        if not (0 <= self.affix_set_id < len(vocabs.affix_sets)):
            raise ValueError(f"affix_set_id {self.affix_set_id} out of range")
        if self.is_bpe_fallback and self.affix_ids:
            raise ValueError("BPE fallback words carry no affixes")

    def to_json(self) -> dict:
        return {
            "surface": self.surface,
            "stem_id": self.stem_id,
            "affix_ids": list(self.affix_ids),
            "pos_tag_id": self.pos_tag_id,
            "affix_set_id": self.affix_set_id,
            "is_bpe_fallback": self.is_bpe_fallback,
            "word_index": self.word_index,
        }

    @classmethod
    def from_json(cls, d: dict) -> "MorphoWord":
        return cls(
            surface=d["surface"],
            stem_id=d["stem_id"],
            affix_ids=tuple(d["affix_ids"]),
            pos_tag_id=d["pos_tag_id"],
            affix_set_id=d["affix_set_id"],
            is_bpe_fallback=d.get("is_bpe_fallback", False),
            word_index=d.get("word_index", 0),
        )


def special_word(stem_id: int) -> MorphoWord:
    """CLS/EOS word slot: reserved stem id, no affixes, PAD POS, empty set."""
    token = {CLS_ID: CLS, EOS_ID: EOS}.get(stem_id, "<special>")
    return MorphoWord(
        surface=token,
        stem_id=stem_id,
        affix_ids=(),
        pos_tag_id=PAD_ID,
        affix_set_id=EMPTY_SET_ID,
    )
