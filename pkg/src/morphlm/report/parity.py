"""Head-to-head study of the bidirectional and causal sentence encoders.

Both variants pre-train on the same synthetic corpus and are then fine-tuned
over several seeds on the same labeled split. The output is a stability table
(one row per variant) written as CSV; nothing about which variant should win
is asserted here, the table just reports what the runs produced.
"""

import os
from typing import Dict, Optional

from ..finetune.data import make_examples, split_examples
from ..finetune.protocol import stability_report
from ..finetune.trainer import FinetuneHyper
from ..model.config import ModelConfig
from ..pretrain.corpus import (
    SyntheticLanguage,
    analyze_corpus,
    build_vocabularies,
    to_morpho_words,
)
from ..pretrain.loop import PretrainHyper, pretrain_run
from ..tokenizer.bpe import train_bpe
from ..tokenizer.segment import segment_text
from .tables import variant_comparison

VARIANTS = ("bert", "gpt")


def run_parity(
    out_dir: str,
    seed: int = 0,
    pretrain_steps: int = 120,
    finetune_runs: int = 3,
    finetune_epochs: int = 2,
    finetune_lr: float = 3e-4,
    sentences: int = 48,
    labeled: int = 40,
    merges: int = 80,
    pretrain_hyper: Optional[PretrainHyper] = None,
) -> Dict:
    """Pre-train + fine-tune both variants on identical data; write the
    comparison table to `out_dir`/comparison.csv and return everything."""
    os.makedirs(out_dir, exist_ok=True)
    lang = SyntheticLanguage(seed)
    raw = lang.sentences(sentences, seed=seed + 1, chained=True, number_rate=0.0)
    bpe = train_bpe(raw, merges)
    corpus = analyze_corpus(raw, lang.analyzer, bpe)
    vocabs = build_vocabularies(corpus)
    tokenized = to_morpho_words(corpus, vocabs)
    sizes = vocabs.sizes()

    pairs = lang.labeled_sentences(labeled, seed=seed + 2)
    splits = split_examples([[text, label] for text, label in pairs], seed=seed)

    def tokenize(text):
        return segment_text(text, lang.analyzer, vocabs, bpe)

    train = make_examples(splits.train, splits.labels, tokenize)
    dev = make_examples(splits.dev, splits.labels, tokenize)

    stats_by_variant: Dict[str, Dict[str, float]] = {}
    scores_by_variant: Dict[str, list] = {}
    pretrains: Dict[str, object] = {}
    for variant in VARIANTS:
        config = ModelConfig.tiny(
            n_stems=sizes["stems"],
            n_affixes=sizes["affixes"],
            n_pos_tags=sizes["pos_tags"],
            n_affix_sets=sizes["affix_sets"],
            variant=variant,
        )
        hyper = pretrain_hyper or PretrainHyper(
            steps=pretrain_steps, seed=seed, batch_sentences=8
        )
        result = pretrain_run(
            tokenized, config, hyper, os.path.join(out_dir, variant, "pretrain")
        )
        pretrains[variant] = result
        stats, scores = stability_report(
            train,
            dev,
            result.checkpoint_path,
            result.config_path,
            FinetuneHyper(
                peak_lr=finetune_lr, batch_size=8, epochs=finetune_epochs, seed=seed
            ),
            runs=finetune_runs,
            first_seed=seed,
        )
        stats_by_variant[variant] = stats
        scores_by_variant[variant] = scores

    csv_path = os.path.join(out_dir, "comparison.csv")
    table = variant_comparison(stats_by_variant, scores_by_variant, path=csv_path)
    return {
        "stats": stats_by_variant,
        "scores": scores_by_variant,
        "table": table,
        "csv_path": csv_path,
        "pretrains": pretrains,
        "labels": splits.labels,
    }
