"""Character-level byte-pair encoding for words the analyzer cannot parse.

Training counts adjacent symbol pairs over whitespace-split words and merges
the most frequent pair, ties broken lexicographically, until the requested
number of merges or exhaustion. Encoding replays the merge rules in order, so
encode followed by decode is the identity on any text over the base alphabet.
"""

import json
from collections import Counter
from typing import Dict, Iterable, List, Tuple


class BpeTrainingError(ValueError):
    """Raised when the corpus cannot produce a usable model."""


class BpeModel:
    def __init__(self, merges: List[Tuple[str, str]], alphabet: Iterable[str]):
        self.merges = list(merges)
        self.alphabet = sorted(set(alphabet))
        self._ranks: Dict[Tuple[str, str], int] = {pair: i for i, pair in enumerate(self.merges)}

    def encode_word(self, word: str) -> List[str]:
        """Split into characters, then apply merge rules in training order."""
        pieces = list(word)
        if len(pieces) < 2:
            return pieces
        while True:
            best_rank = None
            best_at = -1
            for i in range(len(pieces) - 1):
                rank = self._ranks.get((pieces[i], pieces[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_at = i
            if best_rank is None:
                return pieces
            pieces[best_at: best_at + 2] = [pieces[best_at] + pieces[best_at + 1]]

    @staticmethod
    def decode(pieces: Iterable[str]) -> str:
        return "".join(pieces)

    def piece_inventory(self) -> List[str]:
        """All pieces the model can emit: alphabet plus merge products."""
        inv = list(self.alphabet)
        seen = set(inv)
        for a, b in self.merges:
            p = a + b
            if p not in seen:
                seen.add(p)
                inv.append(p)
        return inv

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"alphabet": self.alphabet, "merges": self.merges}, f, ensure_ascii=False)

    @classmethod
    def load(cls, path: str) -> "BpeModel":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        return cls(merges=[tuple(m) for m in doc["merges"]], alphabet=doc["alphabet"])


def train_bpe(corpus: Iterable[str], merges: int) -> BpeModel:
    """Learn up to `merges` merge rules from lines of text.

    Pair counts are over adjacent symbols within words (whitespace never
    merges). Highest count wins, ties broken lexicographically by pair.
    Stops early only on exhaustion (no adjacent pair left anywhere).
    """
    if merges < 0:
        raise ValueError("merges must be >= 0")
    word_counts: Counter = Counter()
    for line in corpus:
        for word in line.split():
            word_counts[word] += 1
    if not word_counts:
        raise BpeTrainingError("empty corpus: cannot train a BPE model")

    alphabet = set()
    for word in word_counts:
        alphabet.update(word)

    pieces_per_word: Dict[str, List[str]] = {w: list(w) for w in word_counts}
    rules: List[Tuple[str, str]] = []
    for _ in range(merges):
        pair_counts: Counter = Counter()
        for word, pieces in pieces_per_word.items():
            n = word_counts[word]
            for i in range(len(pieces) - 1):
                pair_counts[(pieces[i], pieces[i + 1])] += n
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        pair = best[0]
        rules.append(pair)
        merged = pair[0] + pair[1]
        for word, pieces in pieces_per_word.items():
            i = 0
            while i < len(pieces) - 1:
                if pieces[i] == pair[0] and pieces[i + 1] == pair[1]:
                    pieces[i: i + 2] = [merged]
                else:
                    i += 1
    return BpeModel(rules, alphabet)
