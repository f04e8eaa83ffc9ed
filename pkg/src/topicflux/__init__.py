"""Topic-model analytics for venue- and year-tagged document corpora.

The pipeline: preprocess abstracts into a document-term matrix, fit an LDA
topic model (variational EM, with a collapsed Gibbs cross-check backend),
then aggregate the per-document topic proportions into venue, year, and
venue-year composites and the metrics built on them: Hellinger similarity,
uniqueness, entropy, hierarchical venue clustering, topic-dynamics
statistics, and uniqueness-trend regression.
"""

from .corpus import (
    CorpusError,
    Document,
    DocumentTermMatrix,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    load_stopwords,
    preprocess,
    to_dtm,
    tokenize,
)
from .lda import (
    LdaConfig,
    LdaError,
    TopicModel,
    e_step,
    elbo,
    fit,
    fit_gibbs,
    fit_vem,
    infer_document,
    top_terms,
)
from .aggregate import (
    AggregateError,
    DistributionTable,
    MetricVector,
    entropy,
    hellinger,
    uniqueness,
    uniqueness_over_time,
    venue_distribution,
    venue_year_distribution,
    window_distribution,
    year_distribution,
)
from .cluster import Dendrogram, agglomerate_average_link, export_dendrogram, pairwise_euclidean
from .dynamics import (
    TopicDynamicsReport,
    field_dynamics,
    peak_topics,
    topic_changes,
    topic_ranges,
    topic_volatility,
    venue_dynamics,
)
from .trends import TrendResult, classify_trend, ols_fit, trend_suite

__version__ = "0.1.0"
