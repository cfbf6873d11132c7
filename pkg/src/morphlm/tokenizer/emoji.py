"""Emoji verbalization: replace emoji with their Unicode short names.

The table file is line-oriented: `<codepoint-sequence><TAB><short name>`,
codepoints in hex, multi-codepoint emoji separated by spaces. Matching is
codepoint-exact (no normalization) and longest-sequence-first, so flag and
keycap sequences win over their single-codepoint prefixes.
"""

from importlib import resources
from typing import Dict, Iterable, List, Tuple

_DEFAULT_TABLE = "emoji_short_names.tsv"


class EmojiTable:
    """Frozen emoji -> short-name map keyed by codepoint tuples."""

    def __init__(self, entries: Dict[Tuple[int, ...], str]):
        if not entries:
            raise ValueError("emoji table has no entries")
        self._entries = dict(entries)
        self._max_len = max(len(k) for k in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, emoji: str) -> bool:
        return tuple(ord(c) for c in emoji) in self._entries

    def name_of(self, emoji: str) -> str:
        return self._entries[tuple(ord(c) for c in emoji)]

    def items(self) -> List[Tuple[str, str]]:
        return [
            ("".join(chr(c) for c in k), v) for k, v in sorted(self._entries.items())
        ]

    @classmethod
    def parse(cls, lines: Iterable[str]) -> "EmojiTable":
        entries: Dict[Tuple[int, ...], str] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ValueError(f"emoji table line {lineno}: missing tab separator")
            seq, name = line.split("\t", 1)
            name = name.strip()
            if not name:
                raise ValueError(f"emoji table line {lineno}: empty short name")
            try:
                key = tuple(int(cp, 16) for cp in seq.split())
            except ValueError:
                raise ValueError(
                    f"emoji table line {lineno}: bad codepoint sequence {seq!r}"
                ) from None
            if not key:
                raise ValueError(f"emoji table line {lineno}: empty codepoint sequence")
            entries[key] = name
        return cls(entries)

    @classmethod
    def load(cls, path: str) -> "EmojiTable":
        with open(path, "r", encoding="utf-8") as f:
            return cls.parse(f)

    def verbalize(self, text: str) -> str:
        """Replace every known emoji with its space-delimited short name.

        Non-emoji codepoints pass through unchanged; a replacement is padded
        with single spaces only where it would otherwise touch adjacent
        non-space text, so emoji-free text is returned byte-identical.
        """
        out: List[str] = []
        i = 0
        n = len(text)
        while i < n:
            match_len = 0
            name = None
            for k in range(min(self._max_len, n - i), 0, -1):
                key = tuple(ord(c) for c in text[i: i + k])
                if key in self._entries:
                    match_len = k
                    name = self._entries[key]
                    break
            if name is None:
                out.append(text[i])
                i += 1
                continue
            if out and not out[-1][-1].isspace():
                out.append(" ")
            out.append(name)
            nxt = i + match_len
            if nxt < n and not text[nxt].isspace():
                out.append(" ")
            i = nxt
        return "".join(out)


def emoji_verbalize(text: str, table: EmojiTable) -> str:
    return table.verbalize(text)


def load_default_emoji_table() -> EmojiTable:
    """Table checked in with the package (CLDR short names)."""
    ref = resources.files("morphlm.data").joinpath(_DEFAULT_TABLE)
    with ref.open("r", encoding="utf-8") as f:
        return EmojiTable.parse(f)
