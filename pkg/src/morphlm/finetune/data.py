"""Labeled TSV datasets: parsing, label discovery, train/dev splitting.

Format: tab-separated, one example per line, last column is the label and
earlier columns are joined (space-separated) as the text. If every row
carries a third-to-last column whose values are all train/dev/test, that
column is honored as a split marker; otherwise a deterministic seeded-hash
90/10 train/dev split applies.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..tokenizer.vocab import MorphoWord

SPLIT_MARKERS = ("train", "dev", "test")


@dataclass(frozen=True)
class LabeledExample:
    """One classification example after preprocessing."""

    text: str
    tokenized: Tuple[MorphoWord, ...]
    label: int

    def __post_init__(self):
        if not self.tokenized:
            raise ValueError("tokenized is empty; examples must preprocess to >=1 word")
        if self.label < 0:
            raise ValueError(f"negative label id {self.label}")


def parse_tsv(payload: str) -> List[List[str]]:
    """Split raw TSV into rows of columns, rejecting malformed rows.

    Blank lines are ignored. A row with no tab (so no label column) or with
    empty text/label is malformed; all offenders are reported together with
    their 1-based line numbers.
    """
    rows: List[List[str]] = []
    problems: List[str] = []
    for lineno, line in enumerate(payload.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            problems.append(f"line {lineno}: no tab separator")
            continue
        cols = [c.strip() for c in line.split("\t")]
        if not cols[-1]:
            problems.append(f"line {lineno}: empty label column")
            continue
        if not any(c for c in cols[:-1]):
            problems.append(f"line {lineno}: empty text columns")
            continue
        rows.append(cols)
    if problems:
        raise ValueError("malformed TSV: " + "; ".join(problems))
    if not rows:
        raise ValueError("TSV contains no data rows")
    return rows


def discover_labels(rows: Sequence[Sequence[str]]) -> List[str]:
    """Sorted distinct set of last-column values."""
    return sorted({row[-1] for row in rows})


def has_split_column(rows: Sequence[Sequence[str]]) -> bool:
    """True when every row has a third-to-last column marked train/dev/test."""
    return all(len(row) >= 3 and row[-3] in SPLIT_MARKERS for row in rows)


def _row_text(row: Sequence[str], drop_split: bool) -> str:
    cols = list(row[:-1])
    if drop_split:
        del cols[-2]
    return " ".join(c for c in cols if c)


def _hash_split(text: str, index: int, seed: int, dev_fraction: float) -> str:
    digest = hashlib.md5(f"{seed}:{index}:{text}".encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "big") / 2**64
    return "dev" if bucket < dev_fraction else "train"


@dataclass
class DatasetSplits:
    """Text/label pairs per split plus the discovered label inventory."""

    labels: List[str]
    train: List[Tuple[str, str]] = field(default_factory=list)
    dev: List[Tuple[str, str]] = field(default_factory=list)
    test: List[Tuple[str, str]] = field(default_factory=list)

    def counts(self) -> Dict[str, int]:
        return {"train": len(self.train), "dev": len(self.dev), "test": len(self.test)}


def split_examples(
    rows: Sequence[Sequence[str]], seed: int = 0, dev_fraction: float = 0.1
) -> DatasetSplits:
    """Assign rows to splits, honoring an explicit marker column if present.

    Without a marker, the hash split additionally guarantees that neither
    train nor dev ends up empty once there are >= 2 rows (small datasets can
    otherwise land entirely in one bucket), still deterministically.
    """
    if not 0.0 < dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must be in (0,1), got {dev_fraction}")
    marked = has_split_column(rows)
    out = DatasetSplits(labels=discover_labels(rows))
    for i, row in enumerate(rows):
        text = _row_text(row, drop_split=marked)
        split = row[-3] if marked else _hash_split(text, i, seed, dev_fraction)
        getattr(out, split).append((text, row[-1]))
    if not marked and len(rows) >= 2:
        if not out.dev:
            out.dev.append(out.train.pop())
        elif not out.train:
            out.train.append(out.dev.pop())
    return out


def read_tsv_dataset(path: str, seed: int = 0, dev_fraction: float = 0.1) -> DatasetSplits:
    with open(path, "r", encoding="utf-8") as f:
        payload = f.read()
    return split_examples(parse_tsv(payload), seed=seed, dev_fraction=dev_fraction)


def make_examples(
    pairs: Sequence[Tuple[str, str]],
    label_names: Sequence[str],
    tokenize: Callable[[str], Sequence[MorphoWord]],
) -> List[LabeledExample]:
    """Tokenize text/label pairs into model-ready examples."""
    index: Dict[str, int] = {name: i for i, name in enumerate(label_names)}
    out = []
    for text, label in pairs:
        if label not in index:
            raise ValueError(f"label {label!r} not in label inventory {list(label_names)}")
        words = tuple(tokenize(text))
        if not words:
            raise ValueError(f"example tokenized to zero words: {text!r}")
        out.append(LabeledExample(text=text, tokenized=words, label=index[label]))
    return out
