"""Toy morphological analyzer over a declarative grammar file.

The grammar is line-oriented text:

    STEM <surface> <POS>
    PREFIX <surface>
    SUFFIX <surface>

Blank lines and lines starting with '#' are ignored. Analysis strips known
prefixes left-to-right and suffixes right-to-left around a lexicon stem,
greedily trying longer affixes first, and returns every decomposition found.
A word with no decomposition is unanalyzable (a value, not an error).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple


@dataclass(frozen=True)
class Analysis:
    """One candidate segmentation: stem text, affix texts in surface order, POS."""

    stem: str
    affixes: Tuple[str, ...]
    pos: str


@dataclass(frozen=True)
class AnalyzerResponse:
    status: str  # "ok" | "unanalyzable"
    segments: Tuple[Analysis, ...]

    @property
    def ok(self) -> bool:
        return self.status == "ok"


UNANALYZABLE = AnalyzerResponse(status="unanalyzable", segments=())


@dataclass
class Grammar:
    """Closed inventories: stem lexicon with POS tags, prefixes, suffixes."""

    lexicon: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    prefixes: Set[str] = field(default_factory=set)
    suffixes: Set[str] = field(default_factory=set)

    def add_stem(self, surface: str, pos: str) -> None:
        tags = self.lexicon.get(surface, ())
        if pos not in tags:
            self.lexicon[surface] = tuple(sorted(tags + (pos,)))

    @classmethod
    def parse(cls, text: str) -> "Grammar":
        g = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kind = parts[0].upper()
            if kind == "STEM" and len(parts) == 3:
                g.add_stem(parts[1], parts[2])
            elif kind == "PREFIX" and len(parts) == 2:
                g.prefixes.add(parts[1])
            elif kind == "SUFFIX" and len(parts) == 2:
                g.suffixes.add(parts[1])
            else:
                raise ValueError(f"grammar line {lineno}: cannot parse {raw!r}")
        return g

    @classmethod
    def load(cls, path: str) -> "Grammar":
        with open(path, "r", encoding="utf-8") as f:
            return cls.parse(f.read())

    def dump(self) -> str:
        lines = []
        for stem in sorted(self.lexicon):
            for pos in self.lexicon[stem]:
                lines.append(f"STEM {stem} {pos}")
        lines.extend(f"PREFIX {p}" for p in sorted(self.prefixes))
        lines.extend(f"SUFFIX {s}" for s in sorted(self.suffixes))
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dump())


class ToyAnalyzer:
    """Deterministic analyzer enumerating all grammar-licensed decompositions."""

    def __init__(self, grammar: Grammar):
        self.grammar = grammar
        self._prefixes = sorted(grammar.prefixes, key=lambda p: (-len(p), p))
        self._suffixes = sorted(grammar.suffixes, key=lambda s: (-len(s), s))

    def analyze_word(self, surface: str) -> AnalyzerResponse:
        """All analyses of one whitespace-free token, longest-affix-first order."""
        if not surface or any(c.isspace() for c in surface):
            raise ValueError(f"analyze_word expects a nonempty whitespace-free token, got {surface!r}")
        found: List[Analysis] = []
        seen: Set[Analysis] = set()

        def record(core: str, pre: Tuple[str, ...], suf: Tuple[str, ...]) -> None:
            for pos in self.grammar.lexicon.get(core, ()):
                a = Analysis(stem=core, affixes=pre + suf, pos=pos)
                if a not in seen:
                    seen.add(a)
                    found.append(a)

        def peel_suffixes(core: str, pre: Tuple[str, ...], suf: Tuple[str, ...]) -> None:
            record(core, pre, suf)
            for s in self._suffixes:
                if len(s) < len(core) and core.endswith(s):
                    peel_suffixes(core[: -len(s)], pre, (s,) + suf)

        def peel_prefixes(rest: str, pre: Tuple[str, ...]) -> None:
            peel_suffixes(rest, pre, ())
            for p in self._prefixes:
                if len(p) < len(rest) and rest.startswith(p):
                    peel_prefixes(rest[len(p):], pre + (p,))

        peel_prefixes(surface, ())
        if not found:
            return UNANALYZABLE
        return AnalyzerResponse(status="ok", segments=tuple(found))

    def analyze_batch(self, words: Sequence[str]) -> List[AnalyzerResponse]:
        return [self.analyze_word(w) for w in words]


def best_analysis(response: AnalyzerResponse) -> Optional[Analysis]:
    """Disambiguation rule: fewest affixes, then stem, then affixes, then POS.

    Returns None for an unanalyzable response (callers fall back to BPE).
    """
    if not response.ok:
        return None
    return min(response.segments, key=lambda a: (len(a.affixes), a.stem, a.affixes, a.pos))
