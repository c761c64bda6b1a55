"""diatopic: diachronic topic mining for time-stamped document corpora.

From raw article text to trend tests: cleaning and vocabulary-indexed
time slicing, dynamic topic models (with a single-slice variational
topic mixture as the building block), grid-based model selection,
mass-rule document assignment, aggregation into a human area taxonomy,
and OLS/Pearson trend analysis with plot-ready outputs.
"""

__version__ = "0.1.0"

from .assignment import (
    MAIN_AREAS,
    TopicAssignment,
    TopicTags,
    area_counts_by_year,
    area_word_profile,
    assign_documents,
    historical_ratio_series,
    load_tags,
)
from .corpus import CorpusSlice, TimeSlicedCorpus, build_time_slices
from .dictionaries import DictionaryBundle
from .dtm import DynamicTopicModel, GaussianChainSmoother, fit_dtm, infer_theta
from .generate import generate_dtm_corpus, generate_lda_document
from .lda import VariationalLda, fit_lda
from .metrics import log_perplexity, topic_coherence
from .model import FittedModel, Hyperparams, TopicChain
from .preprocess import (
    CleanDocument,
    RawDocument,
    clean_document,
    correct_orthography,
    lemmatize,
    load_raw_documents,
    normalize_and_tokenize,
    recognition_ratio,
    remove_stopwords,
    strip_markup,
)
from .selection import GridCellMetrics, GridSpec, rank_models, run_grid, split_heldout
from .transforms import sample_dirichlet, softmax
from .trend import TrendResult, ols_fit, student_t_cdf

__all__ = [
    "__version__",
    "MAIN_AREAS",
    "TopicAssignment",
    "TopicTags",
    "area_counts_by_year",
    "area_word_profile",
    "assign_documents",
    "historical_ratio_series",
    "load_tags",
    "CorpusSlice",
    "TimeSlicedCorpus",
    "build_time_slices",
    "DictionaryBundle",
    "DynamicTopicModel",
    "GaussianChainSmoother",
    "fit_dtm",
    "infer_theta",
    "generate_dtm_corpus",
    "generate_lda_document",
    "VariationalLda",
    "fit_lda",
    "log_perplexity",
    "topic_coherence",
    "FittedModel",
    "Hyperparams",
    "TopicChain",
    "CleanDocument",
    "RawDocument",
    "clean_document",
    "correct_orthography",
    "lemmatize",
    "load_raw_documents",
    "normalize_and_tokenize",
    "recognition_ratio",
    "remove_stopwords",
    "strip_markup",
    "GridCellMetrics",
    "GridSpec",
    "rank_models",
    "run_grid",
    "split_heldout",
    "sample_dirichlet",
    "softmax",
    "TrendResult",
    "ols_fit",
    "student_t_cdf",
]
