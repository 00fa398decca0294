"""Back-translation evaluation toolkit.

Scores Chinese -> English -> Chinese round-trips with segmentation-aware
metrics and establishes model differences with rank-based statistics.
"""

from .corpus import Corpus, CorpusError, TextSample, parse_corpus, serialize_corpus, validate_corpus
from .metrics import (
    BleuConfig,
    IdfModel,
    MetricVector,
    ScoringConfig,
    bleu,
    chrf,
    fit_idf,
    score_pair,
    semantic_similarity,
    ter,
)
from .pipeline import (
    BackendConfig,
    RunManifest,
    TranslationRecord,
    backtranslate,
    detect_verbatim,
    run_experiment,
    translate,
)
from .segmentation import (
    Lexicon,
    TokenList,
    detect_traditional,
    load_lexicon,
    ngrams,
    segment_chars,
    segment_words,
)
from .stats import (
    ExperimentDesign,
    ScoreMatrix,
    StatTestResult,
    benjamini_hochberg,
    cell_means,
    descriptive_stats,
    dunn_posthoc,
    friedman,
    levene,
    rank_with_ties,
    shapiro_wilk,
    spearman,
)

__version__ = "0.1.0"
