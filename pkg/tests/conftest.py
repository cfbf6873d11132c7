"""Shared fixtures: one tiny language/corpus/checkpoint reused across tests.

Everything expensive is session-scoped so the full suite stays fast; tests
that need isolation copy what they mutate into their own tmp_path.
"""

import pytest
import torch

from morphlm.model.config import ModelConfig
from morphlm.platform.bundle import write_bundle
from morphlm.pretrain.corpus import (
    SyntheticLanguage,
    analyze_corpus,
    build_vocabularies,
    to_morpho_words,
)
from morphlm.pretrain.loop import PretrainHyper, pretrain_run
from morphlm.tokenizer.bpe import train_bpe
from morphlm.tokenizer.segment import segment_text


class TinySetup:
    """Bundle of tokenizer + corpus + config built from one tiny language."""

    def __init__(self, tmp_dir):
        self.lang = SyntheticLanguage(7, n_stems=12, n_prefixes=4, n_suffixes=4)
        self.raw = self.lang.sentences(
            24, seed=11, min_words=4, max_words=6, number_rate=0.0, chained=True
        )
        self.bpe = train_bpe(self.raw, 50)
        corpus = analyze_corpus(self.raw, self.lang.analyzer, self.bpe)
        self.vocabs = build_vocabularies(corpus)
        self.sentences = to_morpho_words(corpus, self.vocabs)
        sizes = self.vocabs.sizes()
        self.config = ModelConfig.tiny(
            n_stems=sizes["stems"],
            n_affixes=sizes["affixes"],
            n_pos_tags=sizes["pos_tags"],
            n_affix_sets=sizes["affix_sets"],
        )
        self.dir = tmp_dir
        self.grammar_path = str(tmp_dir / "grammar.txt")
        self.bpe_path = str(tmp_dir / "bpe.json")
        self.vocabs_path = str(tmp_dir / "vocabs.json")
        self.lang.grammar.save(self.grammar_path)
        self.bpe.save(self.bpe_path)
        self.vocabs.save(self.vocabs_path)

    def tokenize(self, text):
        return segment_text(text, self.lang.analyzer, self.vocabs, self.bpe)

    def config_for(self, variant):
        sizes = self.vocabs.sizes()
        return ModelConfig.tiny(
            n_stems=sizes["stems"],
            n_affixes=sizes["affixes"],
            n_pos_tags=sizes["pos_tags"],
            n_affix_sets=sizes["affix_sets"],
            variant=variant,
        )


@pytest.fixture(scope="session")
def tiny_setup(tmp_path_factory):
    return TinySetup(tmp_path_factory.mktemp("tiny_lang"))


@pytest.fixture(scope="session")
def pretrained(tiny_setup, tmp_path_factory):
    """A briefly pre-trained bert checkpoint shared by fine-tune level tests."""
    out = tmp_path_factory.mktemp("pretrained")
    hyper = PretrainHyper(steps=40, seed=0, batch_sentences=6, peak_lr=2e-3)
    return pretrain_run(tiny_setup.sentences, tiny_setup.config, hyper, str(out))


@pytest.fixture(scope="session")
def labeled_pairs(tiny_setup):
    return tiny_setup.lang.labeled_sentences(48, seed=5)


@pytest.fixture(scope="session")
def bundle_dir(tiny_setup, pretrained, tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle") / "bundle"
    return write_bundle(
        str(out),
        tiny_setup.grammar_path,
        tiny_setup.bpe_path,
        tiny_setup.vocabs_path,
        pretrained.checkpoint_path,
        pretrained.config_path,
    )


@pytest.fixture()
def seeded_generator():
    return torch.Generator().manual_seed(0)
