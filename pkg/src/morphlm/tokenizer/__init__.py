from .vocab import (
    PAD,
    UNK,
    MASK,
    CLS,
    EOS,
    BPE_TAG,
    EMPTY_SET,
    MorphoWord,
    Vocab,
    VocabularySet,
    affix_set_key,
)
from .grammar import Grammar, ToyAnalyzer, Analysis, AnalyzerResponse, best_analysis
from .bpe import BpeModel, train_bpe
from .emoji import EmojiTable, emoji_verbalize, load_default_emoji_table
from .segment import segment_text, bpe_fallback_encode, words_to_jsonl, words_from_jsonl
from .rest_client import RestAnalyzer

__all__ = [
    "PAD",
    "UNK",
    "MASK",
    "CLS",
    "EOS",
    "BPE_TAG",
    "EMPTY_SET",
    "MorphoWord",
    "Vocab",
    "VocabularySet",
    "affix_set_key",
    "Grammar",
    "ToyAnalyzer",
    "Analysis",
    "AnalyzerResponse",
    "best_analysis",
    "BpeModel",
    "train_bpe",
    "EmojiTable",
    "emoji_verbalize",
    "load_default_emoji_table",
    "segment_text",
    "bpe_fallback_encode",
    "words_to_jsonl",
    "words_from_jsonl",
    "RestAnalyzer",
]
