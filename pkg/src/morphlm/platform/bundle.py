"""The shared preprocessing + pre-trained-model bundle a platform serves.

A bundle pins everything a fine-tune job or deployment needs besides the
dataset: the morphological grammar, the trained BPE model, the vocabulary
tables, the pre-trained checkpoint, and preprocessing flags.
"""

import json
import os
import shutil
from typing import List, Optional

from ..tokenizer.bpe import BpeModel
from ..tokenizer.emoji import EmojiTable, load_default_emoji_table
from ..tokenizer.grammar import Grammar, ToyAnalyzer
from ..tokenizer.rest_client import RestAnalyzer
from ..tokenizer.segment import segment_text
from ..tokenizer.vocab import MorphoWord, VocabularySet

BUNDLE_FILES = ("grammar.txt", "bpe.json", "vocabs.json", "pretrained.ckpt", "pretrained.config")


def write_bundle(
    bundle_dir: str,
    grammar_path: str,
    bpe_path: str,
    vocabs_path: str,
    checkpoint_path: str,
    config_path: str,
    verbalize_emoji: bool = True,
    analyzer_url: Optional[str] = None,
) -> str:
    """Copy the artifact files into `bundle_dir` and write its manifest."""
    os.makedirs(bundle_dir, exist_ok=True)
    sources = [grammar_path, bpe_path, vocabs_path, checkpoint_path, config_path]
    for src, dest in zip(sources, BUNDLE_FILES):
        shutil.copyfile(src, os.path.join(bundle_dir, dest))
    manifest = {
        "verbalize_emoji": verbalize_emoji,
        "analyzer": {"kind": "rest", "base_url": analyzer_url} if analyzer_url else {"kind": "toy"},
    }
    with open(os.path.join(bundle_dir, "bundle.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return bundle_dir


class Bundle:
    """Lazy-loaded bundle contents with a shared tokenization entry point."""

    def __init__(self, bundle_dir: str):
        self.dir = bundle_dir
        manifest_path = os.path.join(bundle_dir, "bundle.json")
        if not os.path.exists(manifest_path):
            raise FileNotFoundError(
                f"no bundle at {bundle_dir}; initialize the platform first"
            )
        with open(manifest_path, "r", encoding="utf-8") as f:
            self.manifest = json.load(f)
        for name in BUNDLE_FILES:
            if not os.path.exists(os.path.join(bundle_dir, name)):
                raise FileNotFoundError(f"bundle is missing {name}")
        self._grammar: Optional[Grammar] = None
        self._analyzer = None
        self._bpe: Optional[BpeModel] = None
        self._vocabs: Optional[VocabularySet] = None
        self._emoji: Optional[EmojiTable] = None

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    @property
    def checkpoint_path(self) -> str:
        return self.path("pretrained.ckpt")

    @property
    def config_path(self) -> str:
        return self.path("pretrained.config")

    @property
    def verbalize_emoji(self) -> bool:
        return bool(self.manifest.get("verbalize_emoji", False))

    @property
    def analyzer(self):
        if self._analyzer is None:
            spec = self.manifest.get("analyzer", {"kind": "toy"})
            if spec.get("kind") == "rest":
                self._analyzer = RestAnalyzer(spec["base_url"])
            else:
                self._analyzer = ToyAnalyzer(self.grammar)
        return self._analyzer

    @property
    def grammar(self) -> Grammar:
        if self._grammar is None:
            self._grammar = Grammar.load(self.path("grammar.txt"))
        return self._grammar

    @property
    def bpe(self) -> BpeModel:
        if self._bpe is None:
            self._bpe = BpeModel.load(self.path("bpe.json"))
        return self._bpe

    @property
    def vocabs(self) -> VocabularySet:
        if self._vocabs is None:
            self._vocabs = VocabularySet.load(self.path("vocabs.json"))
        return self._vocabs

    @property
    def emoji_table(self) -> EmojiTable:
        if self._emoji is None:
            self._emoji = load_default_emoji_table()
        return self._emoji

    def tokenize(self, text: str, verbalize_emoji: Optional[bool] = None) -> List[MorphoWord]:
        """Text to MorphoWords exactly the way training preprocessing does."""
        flag = self.verbalize_emoji if verbalize_emoji is None else verbalize_emoji
        return segment_text(
            text,
            self.analyzer,
            self.vocabs,
            self.bpe,
            verbalize_emoji=flag,
            emoji_table=self.emoji_table if flag else None,
        )
