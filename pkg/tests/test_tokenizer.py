"""Tokenizer stack: vocabularies, grammar/analyzer, BPE, segmentation, emoji."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphlm.tokenizer.bpe import BpeTrainingError, BpeModel, train_bpe
from morphlm.tokenizer.emoji import EmojiTable, load_default_emoji_table
from morphlm.tokenizer.grammar import Grammar, ToyAnalyzer, best_analysis
from morphlm.tokenizer.rest_client import AnalyzerProtocolError, RestAnalyzer
from morphlm.tokenizer.segment import (
    bpe_fallback_encode,
    segment_text,
    words_from_jsonl,
    words_to_jsonl,
)
from morphlm.tokenizer.vocab import (
    BPE_TAG_ID,
    EMPTY_SET_ID,
    MASK_ID,
    PAD_ID,
    UNK_ID,
    MorphoWord,
    VocabularySet,
    affix_set_key,
    affix_set_key_to_ids,
    stem_vocab,
)


# ---- vocabularies ----------------------------------------------------------


def test_reserved_token_ids():
    v = stem_vocab()
    assert v.id_of("<pad>") == PAD_ID
    assert v.id_of("<unk>") == UNK_ID
    assert v.id_of("<mask>") == MASK_ID
    assert v.id_of("<cls>") == 3
    assert v.id_of("<eos>") == 4


def test_vocab_add_is_idempotent():
    v = stem_vocab()
    a = v.add("kula")
    b = v.add("kula")
    assert a == b
    assert v.token_of(a) == "kula"
    assert v.id_of("nope") == UNK_ID


def test_affix_set_key_roundtrip():
    assert affix_set_key([7, 5, 7]) == "5+7+7"
    assert affix_set_key_to_ids("5+7+7") == (5, 7, 7)
    assert affix_set_key([]) == "<empty>"


def test_intern_affix_set_order_invariant():
    vocabs = VocabularySet()
    added = vocabs.affix_sets.add(affix_set_key([9, 5]))
    assert vocabs.intern_affix_set([9, 5]) == added
    assert vocabs.intern_affix_set([5, 9]) == added
    assert vocabs.intern_affix_set([5]) == UNK_ID
    assert vocabs.intern_affix_set([]) == EMPTY_SET_ID


def test_vocabulary_set_roundtrip(tmp_path):
    vocabs = VocabularySet()
    vocabs.stems.add("omu")
    vocabs.affixes.add("ra")
    vocabs.pos_tags.add("NOUN")
    vocabs.affix_sets.add(affix_set_key([5]))
    path = tmp_path / "v.json"
    vocabs.save(str(path))
    back = VocabularySet.load(str(path))
    assert back.sizes() == vocabs.sizes()
    assert back.stems.id_of("omu") == vocabs.stems.id_of("omu")
    assert back.affix_sets.tokens() == vocabs.affix_sets.tokens()


def test_morpho_word_json_roundtrip():
    w = MorphoWord(
        surface="akura", stem_id=7, affix_ids=(5, 6), pos_tag_id=5,
        affix_set_id=4, is_bpe_fallback=False, word_index=2,
    )
    assert MorphoWord.from_json(w.to_json()) == w


# ---- grammar + analyzer ----------------------------------------------------


@pytest.fixture()
def toy_grammar():
    g = Grammar()
    g.add_stem("kula", "VERB")
    g.add_stem("ntu", "NOUN")
    g.prefixes = {"a", "umu"}
    g.suffixes = {"ye", "wa"}
    return g


def test_grammar_text_roundtrip(toy_grammar, tmp_path):
    path = tmp_path / "g.txt"
    toy_grammar.save(str(path))
    back = Grammar.load(str(path))
    assert back.lexicon == toy_grammar.lexicon
    assert back.prefixes == toy_grammar.prefixes
    assert back.suffixes == toy_grammar.suffixes


def test_analyzer_segments_affixed_word(toy_grammar):
    analyzer = ToyAnalyzer(toy_grammar)
    response = analyzer.analyze_word("akulaye")
    assert response.ok
    best = best_analysis(response)
    assert best.stem == "kula"
    assert best.affixes == ("a", "ye")
    assert best.pos == "VERB"


def test_analyzer_rejects_unknown_word(toy_grammar):
    analyzer = ToyAnalyzer(toy_grammar)
    response = analyzer.analyze_word("zzz")
    assert not response.ok
    assert best_analysis(response) is None


def test_analyzer_prefers_fewest_affixes(toy_grammar):
    toy_grammar.add_stem("akula", "NOUN")
    analyzer = ToyAnalyzer(toy_grammar)
    best = best_analysis(analyzer.analyze_word("akula"))
    assert best.stem == "akula"
    assert best.affixes == ()


# ---- BPE -------------------------------------------------------------------


def test_bpe_learns_frequent_pair():
    model = train_bpe(["abab abab", "abab"], merges=4)
    assert ("a", "b") == model.merges[0]
    pieces = model.encode_word("abab")
    assert "".join(pieces) == "abab"
    assert len(pieces) < 4


def test_bpe_unknown_chars_become_singletons():
    model = train_bpe(["aa bb"], merges=1)
    assert model.encode_word("xy") == ["x", "y"]


def test_bpe_roundtrip(tmp_path):
    model = train_bpe(["banana bandana", "ananas"], merges=12)
    path = tmp_path / "bpe.json"
    model.save(str(path))
    back = BpeModel.load(str(path))
    assert back.merges == model.merges
    for word in ["banana", "bandana", "ananas", "nabab"]:
        assert back.encode_word(word) == model.encode_word(word)


def test_bpe_empty_corpus_rejected():
    with pytest.raises(BpeTrainingError):
        train_bpe([], merges=5)


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="abcdef", min_size=1, max_size=12))
def test_bpe_encode_concatenates_back(word):
    model = train_bpe(["abcdef fedcba abc abd"], merges=8)
    assert BpeModel.decode(model.encode_word(word)) == word


# ---- segmentation ----------------------------------------------------------


def test_segment_analyzed_and_fallback_words(tiny_setup):
    text = f"{tiny_setup.raw[0]} 1234"
    n_source_words = len(text.split())
    words = tiny_setup.tokenize(text)
    # BPE pieces share the index of the whitespace word they came from
    indices = [w.word_index for w in words]
    assert indices == sorted(indices)
    assert set(indices) == set(range(n_source_words))
    assert not words[0].is_bpe_fallback
    assert words[-1].is_bpe_fallback
    assert words[-1].pos_tag_id == BPE_TAG_ID
    assert words[-1].affix_set_id == EMPTY_SET_ID


def test_bpe_fallback_pieces_are_affixless_stems(tiny_setup):
    words = bpe_fallback_encode(
        "987", tiny_setup.vocabs, tiny_setup.bpe, word_index=0
    )
    assert all(w.is_bpe_fallback for w in words)
    assert all(w.affix_ids == () for w in words)


def test_segment_empty_text_gives_no_words(tiny_setup):
    assert tiny_setup.tokenize("   ") == []


def test_jsonl_roundtrip(tiny_setup, tmp_path):
    sentences = [tiny_setup.tokenize(s) for s in tiny_setup.raw[:3]]
    path = str(tmp_path / "words.jsonl")
    words_to_jsonl(sentences, path)
    assert words_from_jsonl(path) == sentences


# ---- emoji -----------------------------------------------------------------


def test_emoji_verbalization_replaces_known_sequences():
    table = EmojiTable.parse(["1F600\tgrinning face", "2764 FE0F\tred heart"])
    out = table.verbalize("hi \U0001F600 bye ❤️")
    assert out == "hi grinning face bye red heart"


def test_emoji_longest_match_wins():
    table = EmojiTable.parse(["2764\theart", "2764 FE0F\tred heart"])
    assert table.verbalize("❤️") == "red heart"
    assert table.verbalize("❤") == "heart"


def test_default_emoji_table_nonempty():
    table = load_default_emoji_table()
    assert len(table) >= 50
    assert "\U0001F600" in table


# ---- REST analyzer ---------------------------------------------------------


class _AnalyzerStub(BaseHTTPRequestHandler):
    payload = None

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        assert self.path == "/analyze"
        out = type(self).payload or {
            "analyses": [
                {
                    "status": "ok",
                    "segments": [{"stem": w, "affixes": [], "pos": "NOUN"}],
                }
                for w in body["words"]
            ]
        }
        data = json.dumps(out).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def analyzer_server():
    server = HTTPServer(("127.0.0.1", 0), _AnalyzerStub)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_rest_analyzer_round_trip(analyzer_server):
    client = RestAnalyzer(analyzer_server)
    responses = client.analyze_batch(["omugabo", "kinyarwanda"])
    assert all(r.ok for r in responses)
    assert best_analysis(responses[0]).stem == "omugabo"
    assert best_analysis(responses[1]).stem == "kinyarwanda"


def test_rest_analyzer_rejects_mismatched_batch(analyzer_server):
    _AnalyzerStub.payload = {"analyses": []}
    try:
        client = RestAnalyzer(analyzer_server)
        with pytest.raises(AnalyzerProtocolError):
            client.analyze_batch(["one", "two"])
    finally:
        _AnalyzerStub.payload = None
