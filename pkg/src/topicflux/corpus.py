"""Corpus ingestion and text preprocessing.

Turns a record-per-line corpus of venue- and year-tagged abstracts into a
sparse document-term matrix over a frozen vocabulary. The cleaning rules:
lowercase, split on hyphens and every other non-letter character, drop
stopwords, drop terms rarer than ``min_term_count`` corpus-wide, and drop
documents shorter than ``min_doc_words`` surviving tokens.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

YEAR_MIN = 1900
YEAR_MAX = 2100

DEFAULT_MIN_TERM_COUNT = 3
DEFAULT_MIN_DOC_WORDS = 10

# Runs of unicode letters; everything else (digits, punctuation, hyphens,
# whitespace) acts as a separator.
_LETTER_RUN = re.compile(r"[^\W\d_]+", re.UNICODE)


class CorpusError(ValueError):
    """Raised for malformed corpus input or degenerate preprocessing output."""


@dataclass
class Document:
    """One abstract with its venue and publication year."""

    id: str
    venue: str
    year: int
    text: str

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.venue:
            raise CorpusError(f"document {self.id!r}: venue must be non-empty")
        if not YEAR_MIN <= self.year <= YEAR_MAX:
            raise CorpusError(
                f"document {self.id!r}: year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]"
            )
        if not self.text:
            raise CorpusError(f"document {self.id!r}: text must be non-empty")


@dataclass(frozen=True)
class Vocabulary:
    """Frozen, lexicographically ordered term list with a term -> index map."""

    terms: tuple[str, ...]
    index: dict[str, int] = field(repr=False)

    @classmethod
    def from_terms(cls, terms: Iterable[str]) -> "Vocabulary":
        ordered = tuple(sorted(set(terms)))
        return cls(terms=ordered, index={t: i for i, t in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass
class DocumentTermMatrix:
    """Sparse per-document term counts over a frozen vocabulary.

    ``rows[i]`` is a list of (term_index, count) pairs sorted by term index;
    ``doc_meta[i]`` is the matching (id, venue, year) triple.
    """

    rows: list[list[tuple[int, int]]]
    doc_meta: list[tuple[str, str, int]]
    vocab: Vocabulary

    @property
    def n_docs(self) -> int:
        return len(self.rows)

    @property
    def n_terms(self) -> int:
        return len(self.vocab)

    def row_total(self, i: int) -> int:
        return sum(c for _, c in self.rows[i])

    def doc_ids(self) -> list[str]:
        return [m[0] for m in self.doc_meta]

    def venues(self) -> list[str]:
        return [m[1] for m in self.doc_meta]

    def years(self) -> list[int]:
        return [m[2] for m in self.doc_meta]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list, one term per line (bundled SMART list by default).

    Each line is passed through the same letter-run extraction as document
    text, so entries like "ain't" also contribute their fragments.
    """
    if path is None:
        text = resources.files("topicflux.data").joinpath("smart_stopwords.txt").read_text("utf-8")
    else:
        p = Path(path)
        if not p.is_file():
            raise CorpusError(f"stopword file not found: {p}")
        text = p.read_text("utf-8")
    words: set[str] = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if not line:
            continue
        words.update(_LETTER_RUN.findall(unicodedata.normalize("NFC", line)))
    return frozenset(words)


def tokenize(text: str, stopwords: frozenset[str] | set[str]) -> list[str]:
    """Split text into lowercase letter-run tokens with stopwords removed.

    Hyphenated words come apart into their components because the hyphen,
    like every non-letter codepoint, is a separator. Digits and punctuation
    vanish the same way. Order is preserved; empty output is fine.
    """
    norm = unicodedata.normalize("NFC", text).lower()
    return [t for t in _LETTER_RUN.findall(norm) if t not in stopwords]


def build_vocabulary(
    tokenized_docs: Sequence[list[str]], min_term_count: int = DEFAULT_MIN_TERM_COUNT
) -> Vocabulary:
    """Keep exactly the terms occurring >= min_term_count times corpus-wide."""
    if min_term_count < 1:
        raise CorpusError(f"min_term_count must be >= 1, got {min_term_count}")
    counts: Counter[str] = Counter()
    for toks in tokenized_docs:
        counts.update(toks)
    kept = [t for t, c in counts.items() if c >= min_term_count]
    if not kept:
        raise CorpusError(
            f"no term reaches min_term_count={min_term_count}; vocabulary would be empty"
        )
    return Vocabulary.from_terms(kept)


def to_dtm(
    docs: Sequence[Document],
    tokenized_docs: Sequence[list[str]],
    vocab: Vocabulary,
    min_doc_words: int = DEFAULT_MIN_DOC_WORDS,
) -> tuple[DocumentTermMatrix, list[str]]:
    """Count in-vocabulary tokens per document and drop short documents.

    Returns the matrix and the ids of documents dropped for having fewer than
    ``min_doc_words`` surviving tokens.
    """
    if len(docs) != len(tokenized_docs):
        raise CorpusError("docs and tokenized_docs must be parallel")
    if min_doc_words < 1:
        raise CorpusError(f"min_doc_words must be >= 1, got {min_doc_words}")
    rows: list[list[tuple[int, int]]] = []
    meta: list[tuple[str, str, int]] = []
    dropped: list[str] = []
    for doc, toks in zip(docs, tokenized_docs):
        counts = Counter(vocab.index[t] for t in toks if t in vocab.index)
        total = sum(counts.values())
        if total < min_doc_words:
            dropped.append(doc.id)
            continue
        rows.append(sorted(counts.items()))
        meta.append((doc.id, doc.venue, doc.year))
    if not rows:
        raise CorpusError("all documents dropped; nothing left to model")
    return DocumentTermMatrix(rows=rows, doc_meta=meta, vocab=vocab), dropped


def preprocess(
    docs: Sequence[Document],
    stopwords: frozenset[str] | None = None,
    min_term_count: int = DEFAULT_MIN_TERM_COUNT,
    min_doc_words: int = DEFAULT_MIN_DOC_WORDS,
) -> tuple[DocumentTermMatrix, Vocabulary, list[str]]:
    """Full cleaning chain: tokenize, build vocabulary, count, drop."""
    if stopwords is None:
        stopwords = load_stopwords()
    tokenized = [tokenize(d.text, stopwords) for d in docs]
    vocab = build_vocabulary(tokenized, min_term_count)
    dtm, dropped = to_dtm(docs, tokenized, vocab, min_doc_words)
    return dtm, vocab, dropped


def load_corpus(path: str | Path, fmt: str = "jsonl") -> list[Document]:
    """Read documents from a record-per-line file.

    The only supported format tag is "jsonl": each line holds one JSON object
    with string ``id``, string ``journal``, integer ``year``, string
    ``abstract``, and an optional ``title`` (carried nowhere; abstracts are
    what gets modeled). Malformed records are reported with their line number.
    """
    if fmt != "jsonl":
        raise CorpusError(f"unknown corpus format {fmt!r} (expected 'jsonl')")
    p = Path(path)
    if not p.is_file():
        raise CorpusError(f"corpus file not found: {p}")
    docs: list[Document] = []
    seen: set[str] = set()
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise CorpusError(f"line {lineno}: record must be an object")
            for key, kind in (("id", str), ("journal", str), ("year", int), ("abstract", str)):
                if key not in rec:
                    raise CorpusError(f"line {lineno}: missing field {key!r}")
                if not isinstance(rec[key], kind) or isinstance(rec[key], bool):
                    raise CorpusError(f"line {lineno}: field {key!r} must be {kind.__name__}")
            if rec["id"] in seen:
                raise CorpusError(f"line {lineno}: duplicate document id {rec['id']!r}")
            seen.add(rec["id"])
            try:
                docs.append(
                    Document(id=rec["id"], venue=rec["journal"], year=rec["year"], text=rec["abstract"])
                )
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
    return docs


# ---------------------------------------------------------------------------
# Artifact persistence: sparse-triplet DTM, vocabulary, document metadata.

def save_dtm(dtm: DocumentTermMatrix, path: str | Path) -> None:
    """Write the sparse-triplet text format: 'D V' header, then 'doc term count'."""
    lines = [f"{dtm.n_docs} {dtm.n_terms}"]
    for i, row in enumerate(dtm.rows):
        for t, c in row:
            lines.append(f"{i} {t} {c}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text("\n".join(vocab.terms) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    terms = [t for t in Path(path).read_text("utf-8").splitlines() if t]
    if terms != sorted(set(terms)):
        raise CorpusError(f"vocabulary file {path} is not a sorted unique term list")
    return Vocabulary.from_terms(terms)


def save_doc_meta(dtm: DocumentTermMatrix, path: str | Path) -> None:
    lines = ["doc_index,id,venue,year"]
    for i, (doc_id, venue, year) in enumerate(dtm.doc_meta):
        lines.append(f"{i},{doc_id},{venue},{year}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_doc_meta(path: str | Path) -> list[tuple[str, str, int]]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0] != "doc_index,id,venue,year":
        raise CorpusError(f"bad document metadata header in {path}")
    meta: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CorpusError(f"{path}:{lineno}: expected 4 fields")
        meta.append((parts[1], parts[2], int(parts[3])))
    return meta


def load_dtm(dtm_path: str | Path, vocab_path: str | Path, meta_path: str | Path) -> DocumentTermMatrix:
    """Load the triplet file back together with its vocabulary and metadata."""
    vocab = load_vocabulary(vocab_path)
    meta = load_doc_meta(meta_path)
    lines = Path(dtm_path).read_text("utf-8").splitlines()
    if not lines:
        raise CorpusError(f"empty DTM file {dtm_path}")
    try:
        n_docs, n_terms = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise CorpusError(f"bad DTM header in {dtm_path}") from exc
    if n_terms != len(vocab):
        raise CorpusError(f"DTM header V={n_terms} does not match vocabulary size {len(vocab)}")
    if n_docs != len(meta):
        raise CorpusError(f"DTM header D={n_docs} does not match metadata rows {len(meta)}")
    rows: list[list[tuple[int, int]]] = [[] for _ in range(n_docs)]
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        try:
            d, t, c = (int(x) for x in line.split())
        except ValueError as exc:
            raise CorpusError(f"{dtm_path}:{lineno}: bad triplet") from exc
        if not (0 <= d < n_docs and 0 <= t < n_terms and c >= 1):
            raise CorpusError(f"{dtm_path}:{lineno}: triplet out of range")
        rows[d].append((t, c))
    return DocumentTermMatrix(rows=[sorted(r) for r in rows], doc_meta=meta, vocab=vocab)
