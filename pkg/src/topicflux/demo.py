"""Synthetic demo corpus with planted, recoverable structure.

Ten venues over twenty years, each leaning 80/20 on its own vocabulary
block of invented terms. Two venues carry deliberate quirks the analysis
stage should surface: one has a three-year publication gap, and one hard-
switches its dominant topic halfway through its history, which should show
up as that venue's strongest increasing topic change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document

DEMO_SEED = 20120731

YEARS = list(range(1993, 2013))

VENUES = [
    "finance_bulletin",
    "games_annals",
    "heuristics_digest",
    "inventory_studies",
    "logistics_journal",
    "networks_archive",
    "queueing_quarterly",
    "routing_review",
    "scheduling_letters",
    "transport_records",
]

N_TOPICS = 10
TERMS_PER_TOPIC = 30

GAP_VENUE = "networks_archive"
GAP_YEARS = (1999, 2000, 2001)

SHIFT_VENUE = "heuristics_digest"
SHIFT_YEAR = 2003          # first year on the new topic
SHIFT_TARGET_OFFSET = 3    # new dominant topic = (own topic + 3) mod N_TOPICS

DOMINANT_WEIGHT = 0.8

_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]

_FILLER = ["the", "of", "and", "for", "with", "in", "this", "that", "are", "to"]


@dataclass
class DemoSpec:
    """Where the structure was planted, for tests and sanity checks."""

    venues: list[str]
    blocks: list[list[str]]          # topic index -> its vocabulary block
    dominant: dict[str, int]         # venue -> its (initial) dominant topic
    shift_venue: str
    shift_year: int
    shift_target: int                # topic the shift venue moves onto
    gap_venue: str
    gap_years: tuple[int, ...]
    years: list[int]


def _make_blocks(rng: np.random.Generator) -> list[list[str]]:
    seen: set[str] = set()
    blocks: list[list[str]] = []
    for _ in range(N_TOPICS):
        block: list[str] = []
        while len(block) < TERMS_PER_TOPIC:
            word = "".join(rng.choice(_SYLLABLES) for _ in range(3))
            if word not in seen:
                seen.add(word)
                block.append(word)
        blocks.append(block)
    return blocks


def _mixture(dominant: int) -> np.ndarray:
    w = np.full(N_TOPICS, (1.0 - DOMINANT_WEIGHT) / (N_TOPICS - 1))
    w[dominant] = DOMINANT_WEIGHT
    return w


def _compose_text(tokens: list[str], rng: np.random.Generator) -> str:
    """Interleave filler stopwords and punctuation so preprocessing has work to do."""
    words: list[str] = []
    for tok in tokens:
        words.append(tok)
        if rng.random() < 0.15:
            words.append(str(rng.choice(_FILLER)))
    sentences: list[str] = []
    start = 0
    while start < len(words):
        n = int(rng.integers(8, 15))
        chunk = words[start : start + n]
        sentences.append(chunk[0].capitalize() + " " + " ".join(chunk[1:]) if len(chunk) > 1 else chunk[0].capitalize())
        start += n
    return ". ".join(sentences) + "."


def sample_topic_tokens(blocks: list[list[str]], weights: np.ndarray, length: int, rng: np.random.Generator) -> list[str]:
    topics = rng.choice(N_TOPICS, size=length, p=weights)
    return [blocks[k][int(rng.integers(0, TERMS_PER_TOPIC))] for k in topics]


def sample_topic_abstract(spec: DemoSpec, topic: int, rng: np.random.Generator) -> str:
    """An abstract drawn purely from one topic's block, for recommendation checks."""
    length = int(rng.integers(40, 81))
    onehot = np.zeros(N_TOPICS)
    onehot[topic] = 1.0
    return _compose_text(sample_topic_tokens(spec.blocks, onehot, length, rng), rng)


def generate_demo_corpus(seed: int = DEMO_SEED) -> tuple[list[Document], DemoSpec]:
    rng = np.random.default_rng(seed)
    blocks = _make_blocks(rng)
    dominant = {venue: i for i, venue in enumerate(VENUES)}
    shift_target = (dominant[SHIFT_VENUE] + SHIFT_TARGET_OFFSET) % N_TOPICS
    docs: list[Document] = []
    for venue in VENUES:
        for year in YEARS:
            if venue == GAP_VENUE and year in GAP_YEARS:
                continue
            topic = dominant[venue]
            if venue == SHIFT_VENUE and year >= SHIFT_YEAR:
                topic = shift_target
            weights = _mixture(topic)
            for serial in range(int(rng.integers(8, 13))):
                length = int(rng.integers(40, 81))
                tokens = sample_topic_tokens(blocks, weights, length, rng)
                docs.append(
                    Document(
                        id=f"{venue}-{year}-{serial:03d}",
                        venue=venue,
                        year=year,
                        text=_compose_text(tokens, rng),
                    )
                )
    spec = DemoSpec(
        venues=list(VENUES),
        blocks=blocks,
        dominant=dominant,
        shift_venue=SHIFT_VENUE,
        shift_year=SHIFT_YEAR,
        shift_target=shift_target,
        gap_venue=GAP_VENUE,
        gap_years=GAP_YEARS,
        years=list(YEARS),
    )
    return docs, spec


def write_demo_corpus(path: str | Path, seed: int = DEMO_SEED) -> int:
    """Write the demo corpus as JSONL records; returns the document count."""
    docs, _ = generate_demo_corpus(seed)
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(
                json.dumps(
                    {"id": d.id, "journal": d.venue, "year": d.year, "abstract": d.text}
                )
                + "\n"
            )
    return len(docs)
