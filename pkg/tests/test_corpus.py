"""Tokenizer, vocabulary, lexicon, statistics, and JSONL reader checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatemix.corpus import (
    MENTION,
    PAD,
    PAD_INDEX,
    UNK,
    UNK_INDEX,
    URL,
    CorpusStats,
    Document,
    LanguageLexicon,
    Vocabulary,
    build_vocabulary,
    corpus_stats,
    decode,
    encode,
    encode_tokens,
    hindi_proportion,
    read_corpus,
    read_lexicon,
    tokenize,
)
from hatemix.errors import UserInputError


class TestTokenize:
    def test_full_tweet(self):
        text = "Check https://t.co/abc @user #Hate now!!"
        assert tokenize(text) == ["check", URL, MENTION, "hate", "now", "!!"]

    def test_lowercases(self):
        assert tokenize("YAAR Kya") == ["yaar", "kya"]

    @pytest.mark.parametrize("url", ["http://a.b/c", "https://x.yz", "www.site.com/p?q=1"])
    def test_url_forms(self, url):
        assert tokenize(f"see {url} ok") == ["see", URL, "ok"]

    def test_mentions_and_hashtags(self):
        assert tokenize("@A_b9 says #GoHome") == [MENTION, "says", "gohome"]

    def test_punctuation_runs_are_tokens(self):
        assert tokenize("kya?! sach...") == ["kya", "?!", "sach", "..."]

    def test_apostrophes_split(self):
        assert tokenize("don't") == ["don", "'", "t"]

    def test_bare_hash_and_empty(self):
        assert tokenize("#") == ["#"]
        assert tokenize("") == []
        assert tokenize("   ") == []

    def test_placeholders_survive_retokenization(self):
        assert tokenize(f"x {URL} {MENTION} y") == ["x", URL, MENTION, "y"]

    @given(st.text(max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, text):
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once


class TestVocabulary:
    DOCS = [
        Document(id="1", text="aag aag paani"),
        Document(id="2", text="paani aag roti"),
        Document(id="3", text="roti daal"),
    ]

    def test_build_orders_by_count_then_token(self):
        vocab = build_vocabulary(self.DOCS)
        # counts: aag 3, paani 2, roti 2, daal 1
        assert vocab.index_to_token == [PAD, UNK, "aag", "paani", "roti", "daal"]
        assert vocab.counts == {"aag": 3, "paani": 2, "roti": 2, "daal": 1}

    def test_min_count_filters(self):
        vocab = build_vocabulary(self.DOCS, min_count=2)
        assert vocab.index_to_token == [PAD, UNK, "aag", "paani", "roti"]
        assert "daal" not in vocab

    def test_empty_corpus_rejected(self):
        with pytest.raises(UserInputError, match="empty corpus"):
            build_vocabulary([])
        with pytest.raises(ValueError, match="min_count"):
            build_vocabulary(self.DOCS, min_count=0)

    def test_index_falls_back_to_unk(self):
        vocab = build_vocabulary(self.DOCS)
        assert vocab.index("aag") == 2
        assert vocab.index("missing") == UNK_INDEX

    def test_from_tokens_validation(self):
        Vocabulary.from_tokens([PAD, UNK, "a"])
        with pytest.raises(ValueError, match="must start with"):
            Vocabulary.from_tokens(["a", "b"])
        with pytest.raises(ValueError, match="duplicate"):
            Vocabulary.from_tokens([PAD, UNK, "a", "a"])


class TestEncoding:
    vocab = Vocabulary.from_tokens([PAD, UNK, "aag", "paani", "roti"])

    def test_truncates_and_pads(self):
        assert encode_tokens(["aag", "paani", "roti"], self.vocab, 2) == [2, 3]
        assert encode_tokens(["aag"], self.vocab, 4) == [2, 0, 0, 0]

    def test_unknown_maps_to_unk(self):
        assert encode_tokens(["xyz", "aag"], self.vocab, 3) == [UNK_INDEX, 2, PAD_INDEX]

    def test_max_len_validation(self):
        with pytest.raises(ValueError, match="max_len"):
            encode_tokens(["aag"], self.vocab, 0)

    def test_decode_stops_at_pad(self):
        assert decode([2, 3, 0, 4], self.vocab) == ["aag", "paani"]

    def test_round_trip_for_in_vocab_text(self):
        doc = Document(id="x", text="roti aag")
        assert decode(encode(doc, self.vocab, 5), self.vocab) == ["roti", "aag"]


class TestLexicon:
    def test_membership_and_validation(self):
        lex = LanguageLexicon(frozenset({"kya", "hai"}))
        assert "kya" in lex and "what" not in lex
        with pytest.raises(ValueError, match="lowercase"):
            LanguageLexicon(frozenset({"Kya"}))

    def test_read_lexicon(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("kya\nhai  # common verb\n\n# full comment line\nMERA\n")
        lex = read_lexicon(path)
        assert lex.entries == frozenset({"kya", "hai", "mera"})

    def test_read_lexicon_errors(self, tmp_path):
        missing = tmp_path / "nope.txt"
        with pytest.raises(UserInputError, match="not found"):
            read_lexicon(missing)
        bad = tmp_path / "bad.txt"
        bad.write_text("ok\ntwo words\n")
        with pytest.raises(UserInputError, match=r"bad\.txt:2"):
            read_lexicon(bad)

    def test_hindi_proportion_by_hand(self):
        lex = LanguageLexicon(frozenset({"main", "tum"}))
        tokens = ["main", "tum", "love", URL, "!"]
        # word tokens are main, tum, love -> 2 of 3
        assert hindi_proportion(tokens, lex) == pytest.approx(2 / 3)

    def test_hindi_proportion_empty_denominator(self):
        lex = LanguageLexicon(frozenset({"main"}))
        assert hindi_proportion([URL, "!!"], lex) == 0.0
        assert hindi_proportion([], lex) == 0.0


class TestCorpusStats:
    def test_three_doc_fixture_by_hand(self):
        docs = [
            Document(id="1", text="mujhe cricket pasand hai", is_retweet=True),
            Document(id="2", text="cricket is life"),
            Document(id="3", text="pasand nahi"),
        ]
        lex = LanguageLexicon(frozenset({"mujhe", "pasand", "hai", "nahi"}))
        stats = corpus_stats(docs, build_vocabulary(docs), lex)
        assert stats.num_documents == 3
        assert stats.num_retweets == 1
        assert stats.total_tokens == 9
        assert stats.vocab_size == 7  # cricket, hai, is, life, mujhe, nahi, pasand
        # per-doc Hindi shares: 3/4, 0/3, 2/2 -> mean
        assert stats.pct_hindi_tokens_mean == pytest.approx(100 * (0.75 + 0.0 + 1.0) / 3)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            CorpusStats(num_documents=1, num_retweets=2, total_tokens=5,
                        vocab_size=3, pct_hindi_tokens_mean=10.0)
        with pytest.raises(ValueError):
            CorpusStats(num_documents=2, num_retweets=0, total_tokens=2,
                        vocab_size=3, pct_hindi_tokens_mean=10.0)

    def test_empty_corpus(self):
        lex = LanguageLexicon(frozenset())
        with pytest.raises(UserInputError, match="empty corpus"):
            corpus_stats([], Vocabulary.from_tokens([PAD, UNK]), lex)


class TestDocument:
    def test_validation(self):
        with pytest.raises(ValueError, match="id"):
            Document(id="", text="x")
        with pytest.raises(ValueError, match="label"):
            Document(id="1", text="x", label=7)
        assert Document(id="1", text="x").label is None


class TestReadCorpus:
    def test_reads_labels_and_retweets(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"id": "a", "text": "hello", "label": 1, "retweet": true}\n'
            '\n'
            '{"id": "b", "text": "world"}\n'
        )
        docs = read_corpus(path)
        assert [d.id for d in docs] == ["a", "b"]
        assert docs[0].label == 1 and docs[0].is_retweet
        assert docs[1].label is None and not docs[1].is_retweet

    @pytest.mark.parametrize(
        "line,fragment",
        [
            ("not json", "invalid JSON"),
            ("[1, 2]", "JSON object"),
            ('{"text": "x"}', '"id"'),
            ('{"id": "", "text": "x"}', '"id"'),
            ('{"id": "a"}', '"text"'),
            ('{"id": "a", "text": "x", "label": 2}', "label"),
            ('{"id": "a", "text": "x", "label": true}', "label"),
            ('{"id": "a", "text": "x", "retweet": 1}', "retweet"),
        ],
    )
    def test_line_errors_carry_line_numbers(self, tmp_path, line, fragment):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "ok", "text": "fine"}\n' + line + "\n")
        with pytest.raises(UserInputError, match=fragment) as exc:
            read_corpus(path)
        assert ":2:" in str(exc.value)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
        with pytest.raises(UserInputError, match="duplicate id"):
            read_corpus(path)

    def test_require_labels(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n')
        assert read_corpus(path)[0].label is None
        with pytest.raises(UserInputError, match="unlabeled"):
            read_corpus(path, require_labels=True)

    def test_missing_and_empty_files(self, tmp_path):
        missing = tmp_path / "gone.jsonl"
        with pytest.raises(UserInputError, match="gone.jsonl"):
            read_corpus(missing)
        empty = tmp_path / "empty.jsonl"
        empty.write_text("\n\n")
        with pytest.raises(UserInputError, match="empty corpus"):
            read_corpus(empty)
