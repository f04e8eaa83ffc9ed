"""Command-line pipeline: preprocess -> train -> analyze, plus recommend.

Stages communicate through files in the output directory so a long fit
never has to rerun for a re-analysis. A flat key=value config file can
hold any setting; command-line flags win over the file. All randomness
flows from the single configured seed.

Exit codes: 0 success, 1 validation problem (bad flags, paths, or input
data), 2 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import aggregate, cluster, corpus, demo, dynamics, lda, trends

ARTIFACT_DTM = "dtm.txt"
ARTIFACT_VOCAB = "vocabulary.txt"
ARTIFACT_META = "documents.csv"
ARTIFACT_DROPPED = "drop_report.txt"
ARTIFACT_MODEL = "model.txt"
ARTIFACT_ELBO = "elbo_trace.csv"
ARTIFACT_VENUE_TOPICS = "venue_topics.csv"

LOCK_NAME = ".topicflux.lock"


class PipelineError(ValueError):
    """Validation failure: bad configuration, paths, or input data."""


@dataclass
class PipelineConfig:
    corpus: str | None = None
    stopwords: str | None = None          # None means the bundled SMART list
    out: str = "out"
    min_term_count: int = corpus.DEFAULT_MIN_TERM_COUNT
    min_doc_words: int = corpus.DEFAULT_MIN_DOC_WORDS
    topics: int = 40
    alpha: float = 0.1
    seed: int = 0
    backend: str = lda.BACKEND_VEM
    max_em_iters: int = 200
    em_rel_tol: float = 1e-5
    max_doc_iters: int = 100
    doc_rel_tol: float = 1e-6
    gibbs_sweeps: int = 100
    burn_in: int = 50
    thin: int = 5
    exclude_topics: tuple[int, ...] = ()  # 0-based topic indices
    windows: tuple[tuple[int, int], ...] = ()
    top_terms: int = 30
    figures: bool = True
    slope_eps: float = 0.0

    def validate(self) -> None:
        if self.min_term_count < 1 or self.min_doc_words < 1:
            raise PipelineError("preprocessing thresholds must be positive")
        if self.top_terms < 1:
            raise PipelineError("top_terms must be positive")
        for lo, hi in self.windows:
            if lo > hi:
                raise PipelineError(f"window {lo}:{hi} is empty (start exceeds end)")
        if len(self.windows) > 2:
            raise PipelineError("at most two comparison windows are supported")
        if any(k < 0 for k in self.exclude_topics):
            raise PipelineError("excluded topic numbers must be >= 1")
        try:
            self.lda_config().validate()
        except lda.LdaError as exc:
            raise PipelineError(str(exc)) from exc

    def lda_config(self) -> lda.LdaConfig:
        return lda.LdaConfig(
            n_topics=self.topics,
            alpha=self.alpha,
            max_em_iters=self.max_em_iters,
            em_rel_tol=self.em_rel_tol,
            max_doc_iters=self.max_doc_iters,
            doc_rel_tol=self.doc_rel_tol,
            seed=self.seed,
            backend=self.backend,
            gibbs_sweeps=self.gibbs_sweeps,
            burn_in=self.burn_in,
            thin=self.thin,
        )


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError as exc:
        raise PipelineError(f"bad window {text!r}; expected START:END") from exc


def _parse_exclude(text: str) -> tuple[int, ...]:
    """Topic numbers on the command line are 1-based, as printed in exports."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            num = int(part)
        except ValueError as exc:
            raise PipelineError(f"bad topic number {part!r}") from exc
        if num < 1:
            raise PipelineError(f"topic numbers are 1-based, got {num}")
        out.append(num - 1)
    return tuple(sorted(set(out)))


_CONFIG_PARSERS = {
    "corpus": str,
    "stopwords": str,
    "out": str,
    "min_term_count": int,
    "min_doc_words": int,
    "topics": int,
    "alpha": float,
    "seed": int,
    "backend": str,
    "max_em_iters": int,
    "em_rel_tol": float,
    "max_doc_iters": int,
    "doc_rel_tol": float,
    "gibbs_sweeps": int,
    "burn_in": int,
    "thin": int,
    "exclude_topics": _parse_exclude,
    "window": None,  # handled specially; may repeat via comma
    "top_terms": int,
    "figures": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "slope_eps": float,
}


def load_config_file(path: str | Path) -> dict:
    """Parse the flat key=value config format ('#' starts a comment line)."""
    p = Path(path)
    if not p.is_file():
        raise PipelineError(f"config file not found: {p}")
    values: dict = {}
    for lineno, line in enumerate(p.read_text("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in _CONFIG_PARSERS:
            raise PipelineError(f"{p}:{lineno}: unknown config line {line!r}")
        if key == "window":
            values["windows"] = tuple(_parse_window(w) for w in val.split(",") if w)
        else:
            try:
                values[key] = _CONFIG_PARSERS[key](val)
            except (ValueError, TypeError) as exc:
                raise PipelineError(f"{p}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def build_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    overrides = {
        "corpus": args.corpus,
        "stopwords": args.stopwords,
        "out": args.out,
        "min_term_count": args.min_term_count,
        "min_doc_words": args.min_doc_words,
        "topics": args.topics,
        "alpha": args.alpha,
        "seed": args.seed,
        "backend": args.backend,
        "max_em_iters": args.max_em_iters,
        "gibbs_sweeps": args.gibbs_sweeps,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "top_terms": args.top_terms,
        "figures": args.figures,
        "slope_eps": args.slope_eps,
    }
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    if args.exclude_topics is not None:
        values["exclude_topics"] = _parse_exclude(args.exclude_topics)
    if args.window:
        values["windows"] = tuple(_parse_window(w) for w in args.window)
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Output directory helpers.


class _OutputLock:
    """Guards one output directory against concurrent pipeline writers."""

    def __init__(self, out: Path):
        self.path = out / LOCK_NAME

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise PipelineError(
                f"output directory is locked by another run ({self.path}); "
                "remove the lock file if that run is dead"
            ) from None
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


class _ExportTracker:
    """Records written exports so a failed bundle can be removed whole."""

    def __init__(self):
        self.paths: list[Path] = []

    def write(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.paths.append(path)

    def note(self, path: Path) -> None:
        self.paths.append(path)

    def rollback(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise PipelineError(f"missing artifact {path}; run `topicflux {hint}` first")
    return path


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


# ---------------------------------------------------------------------------
# Commands.


def cmd_preprocess(cfg: PipelineConfig) -> int:
    if not cfg.corpus:
        raise PipelineError("preprocess needs --corpus")
    docs = corpus.load_corpus(cfg.corpus)
    stopwords = corpus.load_stopwords(cfg.stopwords)
    dtm, vocab, dropped = corpus.preprocess(
        docs, stopwords, cfg.min_term_count, cfg.min_doc_words
    )
    out = _out_dir(cfg)
    with _OutputLock(out):
        corpus.save_dtm(dtm, out / ARTIFACT_DTM)
        corpus.save_vocabulary(vocab, out / ARTIFACT_VOCAB)
        corpus.save_doc_meta(dtm, out / ARTIFACT_META)
        (out / ARTIFACT_DROPPED).write_text(
            "\n".join(dropped) + ("\n" if dropped else ""), encoding="utf-8"
        )
    print(
        f"preprocess: kept D={dtm.n_docs} documents over V={dtm.n_terms} terms; "
        f"dropped {len(dropped)} short documents"
    )
    return 0


def cmd_train(cfg: PipelineConfig) -> int:
    out = _out_dir(cfg)
    dtm = corpus.load_dtm(
        _require(out / ARTIFACT_DTM, "preprocess"),
        _require(out / ARTIFACT_VOCAB, "preprocess"),
        _require(out / ARTIFACT_META, "preprocess"),
    )
    model = lda.fit(dtm, cfg.lda_config())
    with _OutputLock(out):
        lda.save_model(model, out / ARTIFACT_MODEL)
        trace_lines = ["iteration,elbo"]
        trace_lines += [f"{i},{v!r}" for i, v in enumerate(model.elbo_trace)]
        (out / ARTIFACT_ELBO).write_text("\n".join(trace_lines) + "\n", encoding="utf-8")
    status = "converged" if model.converged else "NOT converged (iteration cap hit)"
    print(
        f"train: backend={cfg.backend} K={model.n_topics} D={model.n_docs} "
        f"iters={len(model.elbo_trace)} {status}"
    )
    return 0


def _default_windows(years: list[int]) -> tuple[tuple[int, int], tuple[int, int]]:
    last = max(years)
    return (last - 9, last - 5), (last - 4, last)


def _window_label(window: tuple[int, int]) -> str:
    return f"{window[0]}_{window[1]}"


def cmd_analyze(cfg: PipelineConfig) -> int:
    out = _out_dir(cfg)
    model = lda.load_model(_require(out / ARTIFACT_MODEL, "train"))
    meta = corpus.load_doc_meta(_require(out / ARTIFACT_META, "preprocess"))
    if [m[0] for m in meta] != model.doc_ids:
        raise PipelineError("model and document metadata disagree; rerun train")
    if cfg.exclude_topics and max(cfg.exclude_topics) >= model.n_topics:
        raise PipelineError(
            f"excluded topic {max(cfg.exclude_topics) + 1} exceeds K={model.n_topics}"
        )
    gamma = model.gamma
    venues = [m[1] for m in meta]
    years = [m[2] for m in meta]
    windows = cfg.windows if len(cfg.windows) == 2 else _default_windows(years)

    year_table = aggregate.year_distribution(gamma, years)
    venue_table = aggregate.venue_distribution(gamma, venues)
    vy_table = aggregate.venue_year_distribution(gamma, venues, years)

    tracker = _ExportTracker()
    with _OutputLock(out):
        try:
            _write_bundle(
                cfg, out, tracker, model, gamma, venues, years, windows,
                year_table, venue_table, vy_table,
            )
        except Exception:
            tracker.rollback()
            raise
    print(f"analyze: wrote {len(tracker.paths)} export files to {out}")
    return 0


def _write_bundle(
    cfg, out, tracker, model, gamma, venues, years, windows,
    year_table, venue_table, vy_table,
):
    excluded = frozenset(cfg.exclude_topics)
    w_a, w_b = windows

    # (a) field-wide topic proportions per year
    tracker.write(out / "year_topics.csv", aggregate.distribution_csv(year_table))

    # (b) window comparison of the strongest recent topics
    mean_a = aggregate.window_distribution(gamma, years, w_a)
    mean_b = aggregate.window_distribution(gamma, years, w_b)
    order = sorted(range(model.n_topics), key=lambda k: (-mean_b[k], k))
    top = order[: min(10, model.n_topics)]
    lines = [f"topic,proportion_{_window_label(w_a)},proportion_{_window_label(w_b)}"]
    for k in top:
        lines.append(f"{k + 1},{_fmt(mean_a[k])},{_fmt(mean_b[k])}")
    tracker.write(out / "window_comparison.csv", "\n".join(lines) + "\n")

    # (c) venue-topic heatmap data plus entropy, entropy-sorted
    tracker.write(out / ARTIFACT_VENUE_TOPICS, aggregate.distribution_csv(venue_table))
    entropies = aggregate.entropy_vector(venue_table)
    tracker.write(
        out / "venue_entropy.csv",
        aggregate.metric_csv(entropies, sort_by_value=True, descending=True),
    )

    # (d) hierarchical clustering of venue composites
    dendro = cluster.cluster_venues(venue_table)
    tracker.write(out / "dendrogram.newick", cluster.export_dendrogram(dendro, "newick") + "\n")
    tracker.write(out / "dendrogram_merges.csv", cluster.export_dendrogram(dendro, "merge-table"))

    # (e) uniqueness slopegraph over the two windows
    rows = _window_uniqueness(gamma, venues, years, w_a, w_b)
    lines = [f"venue,uniqueness_{_window_label(w_a)},uniqueness_{_window_label(w_b)}"]
    for venue, ua, ub in rows:
        lines.append(
            f"{venue},{'' if ua is None else _fmt(ua)},{'' if ub is None else _fmt(ub)}"
        )
    tracker.write(out / "uniqueness_windows.csv", "\n".join(lines) + "\n")

    # (f) per-venue temporal topic distributions
    for venue in sorted(set(venues)):
        yrs, matrix = dynamics.venue_series(vy_table, venue)
        sub = aggregate.DistributionTable(
            aggregate.KEY_YEAR,
            {y: matrix[i] for i, y in enumerate(yrs)},
            {y: vy_table.support_counts[(venue, y)] for y in yrs},
        )
        tracker.write(out / "venue_year" / f"{_slug(venue)}.csv", aggregate.distribution_csv(sub))

    # (g) dynamics report and its tally
    reports = dynamics.all_reports(vy_table, year_table, excluded)
    tracker.write(out / "dynamics.csv", dynamics.dynamics_csv(reports))
    tracker.write(out / "dynamics_tally.csv", dynamics.tally_csv(reports))

    # (h) uniqueness over time and its trend fits
    series = aggregate.uniqueness_over_time(vy_table)
    lines = ["venue,year,uniqueness"]
    for venue in sorted(series):
        for year in sorted(series[venue]):
            lines.append(f"{venue},{year},{_fmt(series[venue][year])}")
    tracker.write(out / "uniqueness_over_time.csv", "\n".join(lines) + "\n")
    results, unfittable = trends.trend_suite(series, cfg.slope_eps)
    tracker.write(out / "uniqueness_trends.csv", trends.trends_csv(results, unfittable))

    # (i) per-topic top terms (wordcloud data)
    width = len(str(model.n_topics))
    for k in range(model.n_topics):
        terms = lda.top_terms(model, k, min(cfg.top_terms, model.n_terms))
        lines = ["term,probability"]
        lines += [f"{t},{_fmt(p)}" for t, p in terms]
        tracker.write(
            out / "top_terms" / f"topic_{k + 1:0{width}d}.csv", "\n".join(lines) + "\n"
        )

    if cfg.figures:
        _render_figures(cfg, out, tracker, model, rows, series, results, windows,
                        year_table, venue_table, vy_table, entropies, dendro, mean_a, mean_b, top)


def _window_uniqueness(gamma, venues, years, w_a, w_b):
    """Per-venue uniqueness inside each window; None where a venue is absent."""
    all_venues = sorted(set(venues))
    per_window = []
    for lo, hi in (w_a, w_b):
        entries = {}
        for venue in all_venues:
            try:
                entries[venue] = aggregate.window_distribution(
                    gamma, years, (lo, hi), venues=venues, venue=venue
                )
            except aggregate.AggregateError:
                continue
        if len(entries) >= 2:
            table = aggregate.DistributionTable(
                aggregate.KEY_VENUE, entries, {v: 1 for v in entries}
            )
            per_window.append(aggregate.uniqueness(table).values)
        else:
            per_window.append({})
    ua, ub = per_window
    return [(v, ua.get(v), ub.get(v)) for v in all_venues]


def _render_figures(cfg, out, tracker, model, slope_rows, series, results, windows,
                    year_table, venue_table, vy_table, entropies, dendro, mean_a, mean_b, top):
    from . import figures  # deferred so analysis without figures never touches matplotlib

    figdir = out / "figures"
    figdir.mkdir(parents=True, exist_ok=True)
    w_a, w_b = windows
    label_a = f"{w_a[0]}-{w_a[1]}"
    label_b = f"{w_b[0]}-{w_b[1]}"

    path = figdir / "year_topics.png"
    figures.plot_year_topics(year_table, path)
    tracker.note(path)

    path = figdir / "window_comparison.png"
    figures.plot_window_comparison(
        [(k, float(mean_a[k]), float(mean_b[k])) for k in top], label_a, label_b, path
    )
    tracker.note(path)

    path = figdir / "venue_topics.png"
    figures.plot_venue_heatmap(venue_table, entropies, path)
    tracker.note(path)

    path = figdir / "dendrogram.png"
    figures.plot_dendrogram(dendro, path)
    tracker.note(path)

    path = figdir / "uniqueness_windows.png"
    figures.plot_uniqueness_slopegraph(slope_rows, label_a, label_b, path)
    tracker.note(path)

    for venue in sorted({v for v, _ in vy_table.entries}):
        yrs, matrix = dynamics.venue_series(vy_table, venue)
        path = figdir / f"venue_year_{_slug(venue)}.png"
        figures.plot_venue_year(venue, yrs, matrix, path)
        tracker.note(path)

    path = figdir / "uniqueness_over_time.png"
    figures.plot_uniqueness_trends(series, results, path)
    tracker.note(path)


def cmd_recommend(cfg: PipelineConfig, abstract_path: str) -> int:
    out = _out_dir(cfg)
    model = lda.load_model(_require(out / ARTIFACT_MODEL, "train"))
    venue_csv = _require(out / ARTIFACT_VENUE_TOPICS, "analyze")
    venue_table = aggregate.load_distribution_csv(
        venue_csv.read_text("utf-8"), aggregate.KEY_VENUE
    )
    p = Path(abstract_path)
    if not p.is_file():
        raise PipelineError(f"abstract file not found: {p}")
    text = p.read_text("utf-8")
    stopwords = corpus.load_stopwords(cfg.stopwords)
    tokens = corpus.tokenize(text, stopwords)
    posterior = lda.infer_document(model, tokens)
    ranked = sorted(
        ((aggregate.hellinger(posterior, venue_table.entries[v]), v) for v in venue_table.entries),
        key=lambda t: (t[0], t[1]),
    )
    lines = ["rank,venue,distance"]
    for rank, (dist, venue) in enumerate(ranked, start=1):
        lines.append(f"{rank},{venue},{_fmt(dist)}")
    (out / "recommendation.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines[: min(6, len(lines))]:
        print(line)
    return 0


def cmd_demo(out_path: str, seed: int) -> int:
    count = demo.write_demo_corpus(out_path, seed)
    print(f"demo: wrote {count} documents to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing.


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--corpus", help="record-per-line corpus file")
    common.add_argument("--stopwords", help="stopword list (default: bundled SMART list)")
    common.add_argument("--out", help="output / artifact directory")
    common.add_argument("--topics", type=int, help="number of topics K")
    common.add_argument("--alpha", type=float, help="document-topic Dirichlet prior")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument(
        "--backend", choices=[lda.BACKEND_VEM, lda.BACKEND_GIBBS], help="fitting backend"
    )
    common.add_argument("--exclude-topics", dest="exclude_topics",
                        help="comma-separated 1-based topic numbers to mask from dynamics")
    common.add_argument("--window", action="append", metavar="A:B",
                        help="inclusive year window; give twice for a comparison pair")
    common.add_argument("--min-term-count", dest="min_term_count", type=int,
                        help="drop terms with fewer corpus-wide occurrences")
    common.add_argument("--min-doc-words", dest="min_doc_words", type=int,
                        help="drop documents with fewer surviving tokens")
    common.add_argument("--max-em-iters", dest="max_em_iters", type=int)
    common.add_argument("--gibbs-sweeps", dest="gibbs_sweeps", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--thin", type=int)
    common.add_argument("--top-terms", dest="top_terms", type=int,
                        help="terms exported per topic")
    common.add_argument("--slope-eps", dest="slope_eps", type=float,
                        help="minimum |slope| for a non-neutral trend class")
    fig = common.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true", default=None)
    fig.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    parser = argparse.ArgumentParser(
        prog="topicflux",
        description="Topic-model analytics over a venue- and year-tagged corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("preprocess", parents=[common],
                   help="build the document-term matrix and vocabulary")
    sub.add_parser("train", parents=[common], help="fit the topic model")
    sub.add_parser("analyze", parents=[common],
                   help="write every analysis export (and figures)")
    rec = sub.add_parser("recommend", parents=[common],
                         help="rank venues for a new abstract")
    rec.add_argument("--abstract", required=True, help="file holding the abstract text")
    dem = sub.add_parser("demo", parents=[common],
                         help="write the bundled synthetic demo corpus")
    dem.add_argument("--demo-out", default="demo_corpus.jsonl",
                     help="path for the generated corpus")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are validation failures here.
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "demo":
            return cmd_demo(args.demo_out, args.seed if args.seed is not None else demo.DEMO_SEED)
        cfg = build_config(args)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "recommend":
            return cmd_recommend(cfg, args.abstract)
        raise PipelineError(f"unknown command {args.command!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
