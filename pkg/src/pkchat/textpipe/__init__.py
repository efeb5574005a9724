"""Tokenization, vocabulary, corpus schema, annotation, synthetic data."""

from .annotate import (
    B_ENT,
    I_ENT,
    OUT,
    TAGSET,
    AnnotatedUtterance,
    auto_annotate,
    load_annotations,
    save_annotations,
)
from .corpus import Scenario, Utterance, corpus_stats, load_corpus, save_corpus, unify_format
from .synthetic import gen_synthetic_corpus, make_demo_kg
from .tokenizer import PUNCTUATION, STOPWORDS, detokenize, tokenize
from .vocab import SPECIALS, Vocab, build_vocab

__all__ = [
    "AnnotatedUtterance", "B_ENT", "I_ENT", "OUT", "TAGSET",
    "auto_annotate", "load_annotations", "save_annotations",
    "Scenario", "Utterance", "corpus_stats", "load_corpus", "save_corpus",
    "unify_format", "gen_synthetic_corpus", "make_demo_kg",
    "PUNCTUATION", "STOPWORDS", "detokenize", "tokenize",
    "SPECIALS", "Vocab", "build_vocab",
]
