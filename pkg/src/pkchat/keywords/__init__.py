"""Keyword extraction: question-frame rules, TF-IDF, TextRank, CRF tagging."""

from .crf import (
    FEATURE_EXTRACTOR_ID,
    NEG_INF,
    CrfModel,
    crf_tag,
    crf_train,
    extract_features,
    log_likelihood,
    log_partition,
    sequence_score,
    tags_to_candidates,
)
from .extract import (
    METHOD_PRIORITY,
    Candidate,
    CorpusStats,
    resolve_entity,
    rule_extract,
    textrank,
    tfidf_rank,
)

__all__ = [
    "FEATURE_EXTRACTOR_ID", "NEG_INF", "CrfModel", "crf_tag", "crf_train",
    "extract_features", "log_likelihood", "log_partition", "sequence_score",
    "tags_to_candidates", "METHOD_PRIORITY", "Candidate", "CorpusStats",
    "resolve_entity", "rule_extract", "textrank", "tfidf_rank",
]
