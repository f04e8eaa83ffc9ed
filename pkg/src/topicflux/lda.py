"""Latent Dirichlet Allocation with two independent backends.

The primary backend is batch variational EM: per-document coordinate ascent
on (gamma, phi) against a frozen topic-word table, then a closed-form
topic-word update, iterated until the variational bound stops moving. A
collapsed Gibbs sampler acts as a second, structurally unrelated route to
the same posterior summaries so the two can be cross-checked.

The document-topic prior alpha is held fixed at its configured value; the
topic-word table is estimated. All likelihood arithmetic is in log space.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import DocumentTermMatrix, Vocabulary
from .mathutil import digamma, gammaln

BACKEND_VEM = "variational-em"
BACKEND_GIBBS = "collapsed-gibbs"

# Additive smoothing applied to the topic-word table before normalization so
# held-out inference never hits a zero-probability term.
BETA_SMOOTHING = 1e-9


class LdaError(ValueError):
    """Raised for invalid model configuration or inputs."""


@dataclass
class LdaConfig:
    """Fitting knobs for both backends."""

    n_topics: int = 40
    alpha: float = 0.1
    max_em_iters: int = 200
    em_rel_tol: float = 1e-5
    max_doc_iters: int = 100
    doc_rel_tol: float = 1e-6
    seed: int = 0
    backend: str = BACKEND_VEM
    gibbs_sweeps: int = 100
    burn_in: int = 50
    thin: int = 5
    gibbs_eta: float = 0.01

    def validate(self) -> None:
        if self.n_topics < 1:
            raise LdaError(f"n_topics must be >= 1, got {self.n_topics}")
        if self.alpha <= 0:
            raise LdaError(f"alpha must be > 0, got {self.alpha}")
        if self.em_rel_tol <= 0 or self.doc_rel_tol <= 0:
            raise LdaError("tolerances must be > 0")
        if self.max_em_iters < 1 or self.max_doc_iters < 1:
            raise LdaError("iteration caps must be >= 1")
        if self.backend not in (BACKEND_VEM, BACKEND_GIBBS):
            raise LdaError(f"unknown backend {self.backend!r}")
        if self.gibbs_sweeps < 1 or self.thin < 1 or self.gibbs_eta <= 0:
            raise LdaError("gibbs_sweeps and thin must be >= 1, gibbs_eta > 0")
        if not 0 <= self.burn_in < self.gibbs_sweeps:
            raise LdaError(
                f"burn_in must satisfy 0 <= burn_in < gibbs_sweeps, "
                f"got {self.burn_in} / {self.gibbs_sweeps}"
            )


@dataclass
class TopicModel:
    """A fitted model: topic-word table, document-topic proportions, diagnostics.

    ``gamma`` rows are normalized proportions so downstream averages operate on
    simplices; the raw variational Dirichlet parameters stay in ``gamma_params``.
    """

    beta: np.ndarray              # (K, V), rows sum to 1
    gamma: np.ndarray             # (D, K), rows sum to 1
    gamma_params: np.ndarray      # (D, K), unnormalized variational parameters
    elbo_trace: list[float]
    config: LdaConfig
    vocab: Vocabulary
    doc_ids: list[str]
    converged: bool

    @property
    def n_topics(self) -> int:
        return self.beta.shape[0]

    @property
    def n_terms(self) -> int:
        return self.beta.shape[1]

    @property
    def n_docs(self) -> int:
        return self.gamma.shape[0]


def _doc_arrays(dtm: DocumentTermMatrix) -> list[tuple[np.ndarray, np.ndarray]]:
    return [
        (
            np.asarray([t for t, _ in row], dtype=np.int64),
            np.asarray([c for _, c in row], dtype=np.float64),
        )
        for row in dtm.rows
    ]


# Guards the per-term phi normalizer against exact zeros.
_PHI_EPS = 1e-100


def _doc_e_step(ids, cts, beta_d, alpha, max_iters, rel_tol, gamma0=None):
    """Coordinate ascent on one document.

    ``beta_d`` is the (K, n) slice of the topic-word table at this document's
    term ids. Phi is never materialized inside the loop; the updates only
    need the per-term normalizers. Returns (gamma, exp E[log theta]) at the
    final state, from which phi and the bound both follow.
    """
    n_topics = beta_d.shape[0]
    if gamma0 is None:
        gamma = np.full(n_topics, alpha + cts.sum() / n_topics)
    else:
        gamma = gamma0.copy()
    exp_elog = np.exp(digamma(gamma) - digamma(gamma.sum()))
    for _ in range(max_iters):
        phinorm = exp_elog @ beta_d + _PHI_EPS
        gamma_new = alpha + exp_elog * (beta_d @ (cts / phinorm))
        change = np.abs(gamma_new - gamma).sum() / gamma_new.sum()
        gamma = gamma_new
        exp_elog = np.exp(digamma(gamma) - digamma(gamma.sum()))
        if change < rel_tol:
            break
    return gamma, exp_elog


def _doc_bound(gamma, cts, phinorm, alpha):
    """Per-document variational bound, profiled over the optimal phi.

    With phi at its optimum the word terms collapse to the log of the
    per-term normalizers, leaving only the Dirichlet terms in gamma.
    """
    n_topics = gamma.shape[0]
    gsum = gamma.sum()
    elog_theta = digamma(gamma) - digamma(gsum)
    bound = gammaln(n_topics * alpha) - n_topics * gammaln(alpha)
    bound += float(((alpha - gamma) * elog_theta).sum())
    bound += float(gammaln(gamma).sum() - gammaln(gsum))
    bound += float(cts @ np.log(phinorm))
    return bound


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=1, keepdims=True)


def _m_step(ss: np.ndarray) -> np.ndarray:
    return _normalize_rows(ss + BETA_SMOOTHING)


def fit(dtm: DocumentTermMatrix, config: LdaConfig, init_beta: np.ndarray | None = None) -> TopicModel:
    """Fit a topic model with the configured backend."""
    config.validate()
    if config.backend == BACKEND_GIBBS:
        return fit_gibbs(dtm, config)
    return fit_vem(dtm, config, init_beta=init_beta)


def fit_vem(dtm: DocumentTermMatrix, config: LdaConfig, init_beta: np.ndarray | None = None) -> TopicModel:
    """Batch variational EM.

    ``init_beta`` overrides the seeded random initialization; it exists for
    resuming a fit and for equivariance checks, and must be a (K, V) table
    with normalized rows.
    """
    config.validate()
    n_topics, n_terms, n_docs = config.n_topics, dtm.n_terms, dtm.n_docs
    if n_docs == 0:
        raise LdaError("cannot fit an empty document-term matrix")
    if n_topics > n_terms:
        raise LdaError(f"n_topics={n_topics} exceeds vocabulary size {n_terms}")
    docs = _doc_arrays(dtm)
    if init_beta is not None:
        beta = np.asarray(init_beta, dtype=float)
        if beta.shape != (n_topics, n_terms):
            raise LdaError(f"init_beta must have shape ({n_topics}, {n_terms})")
        if not np.allclose(beta.sum(axis=1), 1.0, atol=1e-9) or np.any(beta < 0):
            raise LdaError("init_beta rows must be normalized and non-negative")
    else:
        rng = np.random.default_rng(config.seed)
        beta = rng.dirichlet(np.ones(n_terms), size=n_topics)

    alpha = config.alpha
    gamma = np.empty((n_docs, n_topics))
    trace: list[float] = []
    converged = False
    for it in range(config.max_em_iters):
        ss = np.zeros((n_topics, n_terms))
        bound = 0.0
        for d, (ids, cts) in enumerate(docs):
            beta_d = beta[:, ids]
            gamma0 = gamma[d] if it > 0 else None
            gamma[d], exp_elog = _doc_e_step(
                ids, cts, beta_d, alpha, config.max_doc_iters, config.doc_rel_tol, gamma0
            )
            phinorm = exp_elog @ beta_d + _PHI_EPS
            ss[:, ids] += exp_elog[:, None] * beta_d * (cts / phinorm)[None, :]
            bound += _doc_bound(gamma[d], cts, phinorm, alpha)
        trace.append(bound)
        if it > 0 and abs(trace[-1] - trace[-2]) <= config.em_rel_tol * abs(trace[-2]):
            converged = True
            break
        if it < config.max_em_iters - 1:
            beta = _m_step(ss)

    return TopicModel(
        beta=beta,
        gamma=_normalize_rows(gamma),
        gamma_params=gamma,
        elbo_trace=trace,
        config=config,
        vocab=dtm.vocab,
        doc_ids=dtm.doc_ids(),
        converged=converged,
    )


def e_step(doc_row, beta: np.ndarray, alpha: float, max_doc_iters: int = 100, doc_rel_tol: float = 1e-6):
    """Variational posterior for one document against a frozen topic-word table.

    ``doc_row`` is a sequence of (term_index, count) pairs. Returns the
    normalized document-topic simplex and the per-term topic responsibilities
    as an (n_terms_in_doc, K) array with normalized rows.
    """
    beta = np.asarray(beta, dtype=float)
    if not np.allclose(beta.sum(axis=1), 1.0, atol=1e-6):
        raise LdaError("beta rows must be normalized")
    ids = np.asarray([t for t, _ in doc_row], dtype=np.int64)
    cts = np.asarray([c for _, c in doc_row], dtype=np.float64)
    if ids.size == 0 or cts.sum() <= 0:
        raise LdaError("e_step needs at least one observed token")
    beta_d = beta[:, ids]
    gamma, exp_elog = _doc_e_step(ids, cts, beta_d, alpha, max_doc_iters, doc_rel_tol)
    phinorm = exp_elog @ beta_d + _PHI_EPS
    phi = (exp_elog[:, None] * beta_d) / phinorm[None, :]
    return gamma / gamma.sum(), phi.T


def elbo(model: TopicModel, dtm: DocumentTermMatrix) -> float:
    """Variational bound of the model state on a corpus (pure evaluation)."""
    if model.n_terms != dtm.n_terms:
        raise LdaError(
            f"model vocabulary size {model.n_terms} does not match DTM {dtm.n_terms}"
        )
    if model.n_docs != dtm.n_docs:
        raise LdaError(f"model has {model.n_docs} documents, DTM has {dtm.n_docs}")
    beta = model.beta
    total = 0.0
    for d, (ids, cts) in enumerate(_doc_arrays(dtm)):
        gamma = model.gamma_params[d]
        exp_elog = np.exp(digamma(gamma) - digamma(gamma.sum()))
        phinorm = exp_elog @ beta[:, ids] + _PHI_EPS
        total += _doc_bound(gamma, cts, phinorm, model.config.alpha)
    return total


# ---------------------------------------------------------------------------
# Collapsed Gibbs backend.


@dataclass
class GibbsState:
    """Token-level topic assignments plus the count tables they imply."""

    tokens: list[np.ndarray]      # per doc: term id per token
    z: list[np.ndarray]           # per doc: topic per token
    ndk: np.ndarray               # (D, K) doc-topic counts
    nkv: np.ndarray               # (K, V) topic-term counts
    nk: np.ndarray                # (K,) topic totals
    n_terms: int

    @classmethod
    def init(cls, dtm: DocumentTermMatrix, n_topics: int, rng: np.random.Generator) -> "GibbsState":
        tokens = []
        for row in dtm.rows:
            toks = np.concatenate([np.full(c, t, dtype=np.int64) for t, c in row])
            tokens.append(toks)
        ndk = np.zeros((dtm.n_docs, n_topics), dtype=np.int64)
        nkv = np.zeros((n_topics, dtm.n_terms), dtype=np.int64)
        nk = np.zeros(n_topics, dtype=np.int64)
        z = []
        for d, toks in enumerate(tokens):
            zd = rng.integers(0, n_topics, size=toks.size)
            z.append(zd)
            for v, k in zip(toks, zd):
                ndk[d, k] += 1
                nkv[k, v] += 1
                nk[k] += 1
        return cls(tokens=tokens, z=z, ndk=ndk, nkv=nkv, nk=nk, n_terms=dtm.n_terms)

    def sweep(self, alpha: float, eta: float, rng: np.random.Generator) -> None:
        """One full pass resampling every token's topic assignment."""
        veta = self.n_terms * eta
        ndk, nkv, nk = self.ndk, self.nkv, self.nk
        for d, (toks, zd) in enumerate(zip(self.tokens, self.z)):
            ndk_d = ndk[d]
            for i in range(toks.size):
                v = toks[i]
                k_old = zd[i]
                ndk_d[k_old] -= 1
                nkv[k_old, v] -= 1
                nk[k_old] -= 1
                p = (ndk_d + alpha) * (nkv[:, v] + eta) / (nk + veta)
                cum = np.cumsum(p)
                k_new = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                zd[i] = k_new
                ndk_d[k_new] += 1
                nkv[k_new, v] += 1
                nk[k_new] += 1

    def counts_consistent(self) -> bool:
        """Count tables must always match the assignment vector exactly."""
        ndk = np.zeros_like(self.ndk)
        nkv = np.zeros_like(self.nkv)
        for d, (toks, zd) in enumerate(zip(self.tokens, self.z)):
            for v, k in zip(toks, zd):
                ndk[d, k] += 1
                nkv[k, v] += 1
        return (
            np.array_equal(ndk, self.ndk)
            and np.array_equal(nkv, self.nkv)
            and np.array_equal(self.nkv.sum(axis=1), self.nk)
            and np.array_equal(self.ndk.sum(axis=1), [t.size for t in self.tokens])
        )

    def log_joint(self, alpha: float, eta: float) -> float:
        """Collapsed log p(w, z): theta and beta integrated out."""
        n_topics = self.nk.size
        doc_lens = self.ndk.sum(axis=1)
        s = float(
            self.ndk.shape[0] * (gammaln(n_topics * alpha) - n_topics * gammaln(alpha))
            - gammaln(n_topics * alpha + doc_lens).sum()
            + gammaln(self.ndk + alpha).sum()
        )
        s += float(
            n_topics * (gammaln(self.n_terms * eta) - self.n_terms * gammaln(eta))
            - gammaln(self.n_terms * eta + self.nk).sum()
            + gammaln(self.nkv + eta).sum()
        )
        return s


def fit_gibbs(dtm: DocumentTermMatrix, config: LdaConfig) -> TopicModel:
    """Collapsed Gibbs sampling; estimates averaged over post-burn-in sweeps."""
    config.validate()
    n_topics = config.n_topics
    if n_topics > dtm.n_terms:
        raise LdaError(f"n_topics={n_topics} exceeds vocabulary size {dtm.n_terms}")
    rng = np.random.default_rng(config.seed)
    state = GibbsState.init(dtm, n_topics, rng)
    alpha, eta = config.alpha, config.gibbs_eta
    beta_acc = np.zeros((n_topics, dtm.n_terms))
    gamma_acc = np.zeros((dtm.n_docs, n_topics))
    doc_lens = state.ndk.sum(axis=1)
    n_samples = 0
    trace: list[float] = []
    for sweep in range(config.gibbs_sweeps):
        state.sweep(alpha, eta, rng)
        trace.append(state.log_joint(alpha, eta))
        if sweep >= config.burn_in and (sweep - config.burn_in) % config.thin == 0:
            beta_acc += (state.nkv + eta) / (state.nk + dtm.n_terms * eta)[:, None]
            gamma_acc += (state.ndk + alpha) / (doc_lens + n_topics * alpha)[:, None]
            n_samples += 1
    beta = _normalize_rows(beta_acc / n_samples)
    gamma_params = gamma_acc / n_samples * (doc_lens + n_topics * alpha)[:, None]
    return TopicModel(
        beta=beta,
        gamma=_normalize_rows(gamma_acc / n_samples),
        gamma_params=gamma_params,
        elbo_trace=trace,
        config=config,
        vocab=dtm.vocab,
        doc_ids=dtm.doc_ids(),
        converged=True,
    )


# ---------------------------------------------------------------------------
# Held-out inference and topic summaries.


def infer_document(model: TopicModel, tokens: Sequence[str]) -> np.ndarray:
    """Posterior topic proportions for a tokenized document under frozen beta."""
    counts: dict[int, int] = {}
    for t in tokens:
        idx = model.vocab.index.get(t)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        raise LdaError("document has no in-vocabulary tokens")
    gamma, _ = e_step(
        sorted(counts.items()),
        model.beta,
        model.config.alpha,
        model.config.max_doc_iters,
        model.config.doc_rel_tol,
    )
    return gamma


def top_terms(model: TopicModel, topic: int, n: int) -> list[tuple[str, float]]:
    """The n most probable terms of one topic; ties break lexicographically."""
    if not 0 <= topic < model.n_topics:
        raise LdaError(f"topic index {topic} out of range [0, {model.n_topics})")
    if not 0 <= n <= model.n_terms:
        raise LdaError(f"n must be in [0, {model.n_terms}], got {n}")
    row = model.beta[topic]
    order = sorted(range(model.n_terms), key=lambda v: (-row[v], model.vocab.terms[v]))
    return [(model.vocab.terms[v], float(row[v])) for v in order[:n]]


# ---------------------------------------------------------------------------
# Persistence: versioned text layout, exact float round trip via repr().

_MODEL_MAGIC = "topicflux-model-v1"


def save_model(model: TopicModel, path: str | Path) -> None:
    cfg = model.config
    lines = [
        _MODEL_MAGIC,
        f"K={model.n_topics}",
        f"V={model.n_terms}",
        f"D={model.n_docs}",
        f"alpha={cfg.alpha!r}",
        f"seed={cfg.seed}",
        f"backend={cfg.backend}",
        f"converged={int(model.converged)}",
        "#ELBO",
        " ".join(repr(v) for v in model.elbo_trace),
        "#VOCAB",
        " ".join(model.vocab.terms),
        "#BETA",
    ]
    for row in model.beta:
        lines.append(" ".join(repr(float(x)) for x in row))
    lines.append("#GAMMA")
    for doc_id, row in zip(model.doc_ids, model.gamma):
        lines.append(doc_id + " " + " ".join(repr(float(x)) for x in row))
    lines.append("#GAMMA_PARAMS")
    for row in model.gamma_params:
        lines.append(" ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TopicModel:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0] != _MODEL_MAGIC:
        raise LdaError(f"{path}: not a {_MODEL_MAGIC} file")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("#"):
        key, _, val = lines[i].partition("=")
        header[key] = val
        i += 1
    try:
        n_topics = int(header["K"])
        n_terms = int(header["V"])
        n_docs = int(header["D"])
        cfg = LdaConfig(
            n_topics=n_topics,
            alpha=float(header["alpha"]),
            seed=int(header["seed"]),
            backend=header["backend"],
        )
        converged = bool(int(header["converged"]))
    except (KeyError, ValueError) as exc:
        raise LdaError(f"{path}: malformed model header") from exc

    def expect(tag: str) -> None:
        nonlocal i
        if i >= len(lines) or lines[i] != tag:
            raise LdaError(f"{path}: expected section {tag}")
        i += 1

    expect("#ELBO")
    trace = [float(x) for x in lines[i].split()] if lines[i] else []
    i += 1
    expect("#VOCAB")
    vocab = Vocabulary.from_terms(lines[i].split())
    if len(vocab) != n_terms:
        raise LdaError(f"{path}: vocabulary size mismatch")
    i += 1
    expect("#BETA")
    beta = np.array([[float(x) for x in lines[i + k].split()] for k in range(n_topics)])
    i += n_topics
    expect("#GAMMA")
    doc_ids, gamma_rows = [], []
    for d in range(n_docs):
        parts = lines[i + d].split()
        doc_ids.append(parts[0])
        gamma_rows.append([float(x) for x in parts[1:]])
    gamma = np.array(gamma_rows)
    i += n_docs
    expect("#GAMMA_PARAMS")
    gamma_params = np.array(
        [[float(x) for x in lines[i + d].split()] for d in range(n_docs)]
    )
    if beta.shape != (n_topics, n_terms) or gamma.shape != (n_docs, n_topics):
        raise LdaError(f"{path}: array shape mismatch")
    return TopicModel(
        beta=beta,
        gamma=gamma,
        gamma_params=gamma_params,
        elbo_trace=trace,
        config=cfg,
        vocab=vocab,
        doc_ids=doc_ids,
        converged=converged,
    )
