"""Preprocessing: tokenization rules, vocabulary thresholds, DTM building."""

import json

import numpy as np
import pytest

from topicflux.corpus import (
    CorpusError,
    Document,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    load_doc_meta,
    load_dtm,
    load_stopwords,
    load_vocabulary,
    preprocess,
    save_doc_meta,
    save_dtm,
    save_vocabulary,
    to_dtm,
    tokenize,
)

EMPTY = frozenset()


class TestTokenize:
    def test_hyphenated_words_split_apart(self):
        assert tokenize("Mixed-integer programming", EMPTY) == [
            "mixed",
            "integer",
            "programming",
        ]

    def test_stopwords_removed(self):
        sw = frozenset({"the", "is"})
        assert tokenize("The algorithm is optimal", sw) == ["algorithm", "optimal"]

    def test_empty_input(self):
        assert tokenize("", EMPTY) == []

    def test_digits_and_punctuation_are_separators(self):
        assert tokenize("x2 solves 95% of (hard) cases!", EMPTY) == [
            "x",
            "solves",
            "of",
            "hard",
            "cases",
        ]

    def test_unicode_normalized_and_lowercased(self):
        # decomposed e + combining acute must equal the composed form
        assert tokenize("décision", EMPTY) == tokenize("décision", EMPTY)

    def test_idempotent_under_rejoin(self):
        sw = load_stopwords()
        rng = np.random.default_rng(5)
        words = ["alpha", "Beta-gamma", "the", "x1y", "(no)", "Queueing-theory"]
        for _ in range(50):
            text = " ".join(rng.choice(words, size=rng.integers(0, 12)))
            once = tokenize(text, sw)
            assert tokenize(" ".join(once), sw) == once


class TestStopwords:
    def test_bundled_smart_list_loads(self):
        sw = load_stopwords()
        assert {"the", "is", "because", "wherever"} <= sw
        assert "algorithm" not in sw

    def test_apostrophe_entries_contribute_fragments(self):
        sw = load_stopwords()
        # "ain't" on the list arrives as its letter runs
        assert "ain" in sw

    def test_missing_file_reports_path(self, tmp_path):
        with pytest.raises(CorpusError, match="no_such_list.txt"):
            load_stopwords(tmp_path / "no_such_list.txt")


class TestVocabulary:
    def test_threshold_keeps_frequent_terms_only(self):
        docs = [["algorithm"] * 5 + ["zeta"] * 2]
        vocab = build_vocabulary(docs, min_term_count=3)
        assert "algorithm" in vocab
        assert "zeta" not in vocab

    def test_threshold_one_keeps_everything(self):
        docs = [["a", "b"], ["c"]]
        vocab = build_vocabulary(docs, min_term_count=1)
        assert list(vocab.terms) == ["a", "b", "c"]

    def test_all_unique_tokens_fail(self):
        with pytest.raises(CorpusError, match="empty"):
            build_vocabulary([["a", "b", "c"]], min_term_count=3)

    def test_lexicographic_order_and_positions(self):
        vocab = Vocabulary.from_terms(["zeta", "alpha", "mid"])
        assert list(vocab.terms) == ["alpha", "mid", "zeta"]
        assert [vocab.index[t] for t in vocab.terms] == [0, 1, 2]


def _doc(i, text, venue="v", year=2000):
    return Document(id=f"doc{i}", venue=venue, year=year, text=text)


class TestToDtm:
    def test_counts_aggregate_duplicates(self):
        docs = [_doc(0, "raw")]
        vocab = Vocabulary.from_terms(["a", "b"])
        dtm, dropped = to_dtm(docs, [["a", "a", "b"]], vocab, min_doc_words=1)
        assert dtm.rows == [[(0, 2), (1, 1)]]
        assert dropped == []

    def test_short_documents_dropped_and_reported(self):
        docs = [_doc(0, "raw"), _doc(1, "raw")]
        vocab = Vocabulary.from_terms(["a"])
        tokenized = [["a"] * 9, ["a"] * 10]
        dtm, dropped = to_dtm(docs, tokenized, vocab, min_doc_words=10)
        assert dropped == ["doc0"]
        assert dtm.n_docs == 1

    def test_out_of_vocabulary_document_dropped(self):
        docs = [_doc(0, "raw"), _doc(1, "raw")]
        vocab = Vocabulary.from_terms(["a"])
        dtm, dropped = to_dtm(docs, [["q", "z"], ["a"]], vocab, min_doc_words=1)
        assert dropped == ["doc0"]

    def test_all_dropped_is_an_error(self):
        with pytest.raises(CorpusError, match="all documents dropped"):
            to_dtm([_doc(0, "raw")], [["a"]], Vocabulary.from_terms(["a"]), min_doc_words=5)

    def test_row_totals_conserve_surviving_tokens(self):
        rng = np.random.default_rng(11)
        terms = [f"t{i}" for i in range(20)]
        vocab = Vocabulary.from_terms(terms)
        docs, tokenized = [], []
        for i in range(30):
            toks = list(rng.choice(terms, size=rng.integers(1, 40)))
            docs.append(_doc(i, "raw"))
            tokenized.append(toks)
        dtm, dropped = to_dtm(docs, tokenized, vocab, min_doc_words=1)
        kept = [t for d, t in zip(docs, tokenized) if d.id not in dropped]
        for row_toks, i in zip(kept, range(dtm.n_docs)):
            assert dtm.row_total(i) == len(row_toks)


class TestLoadCorpus:
    def _write(self, path, records):
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n", "utf-8")

    def test_valid_records_in_file_order(self, tmp_path):
        f = tmp_path / "c.jsonl"
        recs = [
            {"id": "a", "journal": "J1", "year": 1999, "abstract": "one two"},
            {"id": "b", "journal": "J2", "year": 2000, "abstract": "three"},
            {"id": "c", "journal": "J1", "year": 2001, "abstract": "four", "title": "T"},
        ]
        self._write(f, recs)
        docs = load_corpus(f)
        assert [d.id for d in docs] == ["a", "b", "c"]
        assert docs[0].venue == "J1" and docs[1].year == 2000

    def test_missing_year_names_the_line(self, tmp_path):
        f = tmp_path / "c.jsonl"
        self._write(
            f,
            [
                {"id": "a", "journal": "J", "year": 1999, "abstract": "x"},
                {"id": "b", "journal": "J", "abstract": "y"},
            ],
        )
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(f)

    def test_empty_file_gives_empty_list(self, tmp_path):
        f = tmp_path / "c.jsonl"
        f.write_text("", "utf-8")
        assert load_corpus(f) == []

    def test_duplicate_id_rejected(self, tmp_path):
        f = tmp_path / "c.jsonl"
        self._write(
            f,
            [
                {"id": "a", "journal": "J", "year": 1999, "abstract": "x"},
                {"id": "a", "journal": "J", "year": 2000, "abstract": "y"},
            ],
        )
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(f)

    def test_unreadable_path_and_unknown_format(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_corpus(tmp_path / "missing.jsonl")
        f = tmp_path / "c.jsonl"
        f.write_text("", "utf-8")
        with pytest.raises(CorpusError, match="format"):
            load_corpus(f, fmt="xml")

    def test_year_bounds_enforced(self, tmp_path):
        f = tmp_path / "c.jsonl"
        self._write(f, [{"id": "a", "journal": "J", "year": 1850, "abstract": "x"}])
        with pytest.raises(CorpusError, match="line 1"):
            load_corpus(f)


class TestPersistence:
    def _sample_dtm(self):
        rng = np.random.default_rng(3)
        docs = [
            _doc(i, " ".join(rng.choice(["amber", "basalt", "cobalt", "delta"], size=12)))
            for i in range(8)
        ]
        return preprocess(docs, frozenset(), min_term_count=1, min_doc_words=1)

    def test_round_trip(self, tmp_path):
        dtm, vocab, _ = self._sample_dtm()
        save_dtm(dtm, tmp_path / "dtm.txt")
        save_vocabulary(vocab, tmp_path / "vocab.txt")
        save_doc_meta(dtm, tmp_path / "meta.csv")
        back = load_dtm(tmp_path / "dtm.txt", tmp_path / "vocab.txt", tmp_path / "meta.csv")
        assert back.rows == dtm.rows
        assert back.doc_meta == dtm.doc_meta
        assert back.vocab.terms == dtm.vocab.terms

    def test_serialization_is_deterministic(self, tmp_path):
        for name in ("a", "b"):
            dtm, vocab, _ = self._sample_dtm()
            save_dtm(dtm, tmp_path / f"{name}.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_vocab_file_must_be_sorted(self, tmp_path):
        (tmp_path / "bad.txt").write_text("zeta\nalpha\n", "utf-8")
        with pytest.raises(CorpusError, match="sorted"):
            load_vocabulary(tmp_path / "bad.txt")

    def test_meta_round_trip(self, tmp_path):
        dtm, _, _ = self._sample_dtm()
        save_doc_meta(dtm, tmp_path / "meta.csv")
        assert load_doc_meta(tmp_path / "meta.csv") == dtm.doc_meta


def test_preprocess_full_chain_applies_order():
    # stopword removal happens before the min-count filter: "the" appears
    # 5 times but must not enter the vocabulary.
    sw = frozenset({"the"})
    docs = [_doc(i, "the solver beats the cutting plane the") for i in range(5)]
    dtm, vocab, dropped = preprocess(docs, sw, min_term_count=3, min_doc_words=1)
    assert "the" not in vocab
    assert {"solver", "beats", "cutting", "plane"} == set(vocab.terms)
