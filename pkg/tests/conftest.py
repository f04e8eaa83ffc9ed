"""Shared fixtures: planted corpora, fitted models, topic matching helpers.

The acceptance tests (tests/test_acceptance.py) each cover one numbered
criterion; a terminal-summary hook prints one PASS/FAIL line per criterion
at the end of the run.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from topicflux import lda
from topicflux.aggregate import hellinger
from topicflux.corpus import DocumentTermMatrix, Vocabulary

PLANTED_SEED = 20251104
PLANTED_TOPICS = 5
PLANTED_BLOCK = 50          # terms per block; V = 250
PLANTED_DOCS = 500


def make_planted_dtm(seed: int = PLANTED_SEED):
    """Disjoint-support corpus: doc d draws only from block d mod 5.

    Returns (dtm, planted labels, planted block distributions).
    """
    rng = np.random.default_rng(seed)
    n_terms = PLANTED_TOPICS * PLANTED_BLOCK
    vocab = Vocabulary.from_terms([f"w{i:03d}" for i in range(n_terms)])
    rows, meta, labels = [], [], []
    for d in range(PLANTED_DOCS):
        t = d % PLANTED_TOPICS
        labels.append(t)
        length = int(rng.integers(40, 81))
        ids = rng.integers(t * PLANTED_BLOCK, (t + 1) * PLANTED_BLOCK, size=length)
        counts: dict[int, int] = {}
        for i in ids:
            counts[int(i)] = counts.get(int(i), 0) + 1
        rows.append(sorted(counts.items()))
        meta.append((f"d{d:03d}", f"venue{t}", 2000 + d % 10))
    blocks = np.zeros((PLANTED_TOPICS, n_terms))
    for t in range(PLANTED_TOPICS):
        blocks[t, t * PLANTED_BLOCK : (t + 1) * PLANTED_BLOCK] = 1.0 / PLANTED_BLOCK
    return DocumentTermMatrix(rows=rows, doc_meta=meta, vocab=vocab), labels, blocks


def greedy_match(dist: np.ndarray) -> dict[int, int]:
    """Greedy assignment on a (rows x cols) distance matrix: col -> row."""
    n_rows, n_cols = dist.shape
    pairs = sorted((dist[r, c], r, c) for r in range(n_rows) for c in range(n_cols))
    used_r: set[int] = set()
    used_c: set[int] = set()
    match: dict[int, int] = {}
    for _, r, c in pairs:
        if r not in used_r and c not in used_c:
            match[c] = r
            used_r.add(r)
            used_c.add(c)
    return match


def match_beta_to_blocks(beta: np.ndarray, blocks: np.ndarray) -> dict[int, int]:
    """Map planted block index -> fitted topic index by Hellinger closeness."""
    dist = np.array(
        [[hellinger(beta[k], blocks[t]) for t in range(blocks.shape[0])] for k in range(beta.shape[0])]
    )
    return greedy_match(dist)


@pytest.fixture(scope="session")
def planted():
    dtm, labels, blocks = make_planted_dtm()
    return {"dtm": dtm, "labels": labels, "blocks": blocks}


@pytest.fixture(scope="session")
def fit_times():
    return {}


@pytest.fixture(scope="session")
def vem_model(planted, fit_times):
    cfg = lda.LdaConfig(n_topics=PLANTED_TOPICS, alpha=0.1, seed=42)
    t0 = time.perf_counter()
    model = lda.fit(planted["dtm"], cfg)
    fit_times["vem"] = time.perf_counter() - t0
    return model


@pytest.fixture(scope="session")
def gibbs_model(planted, fit_times):
    cfg = lda.LdaConfig(
        n_topics=PLANTED_TOPICS, alpha=0.1, seed=42, backend=lda.BACKEND_GIBBS
    )
    t0 = time.perf_counter()
    model = lda.fit(planted["dtm"], cfg)
    fit_times["gibbs"] = time.perf_counter() - t0
    return model


# ---------------------------------------------------------------------------
# One PASS/FAIL line per acceptance criterion at the end of the run.

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_results):
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"[{_acceptance_results[name]}] {label}")
