"""Keyword candidates from question-frame rules, TF-IDF, and TextRank, plus
resolution of candidates onto knowledge-graph entities."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..textpipe.tokenizer import PUNCTUATION, STOPWORDS, tokenize

METHOD_PRIORITY = {"crf": 0, "rule": 1, "textrank": 2, "tfidf": 3}

_QUESTION_WORDS = {"what", "which", "where"}
_COPULAS = {"is", "are"}


@dataclass(frozen=True)
class Candidate:
    span: tuple[int, int]  # [start, end) token indices
    text: str
    score: float
    method: str


@dataclass
class CorpusStats:
    """Document counts for the smoothed inverse document frequency."""
    n_docs: int
    doc_freq: Counter

    @classmethod
    def from_documents(cls, documents) -> "CorpusStats":
        df: Counter = Counter()
        n = 0
        for doc in documents:
            n += 1
            df.update(set(doc))
        return cls(n_docs=n, doc_freq=df)

    def idf(self, token: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.doc_freq.get(token, 0)))


def rule_extract(tokens: list[str]) -> list[Candidate]:
    """Match question frames like "what is the" / "which are" and take the
    phrase that follows, up to the next punctuation token."""
    candidates = []
    i = 0
    n = len(tokens)
    while i < n - 1:
        if tokens[i] in _QUESTION_WORDS and tokens[i + 1] in _COPULAS:
            start = i + 2
            if start < n and tokens[start] == "the":
                start += 1
            end = start
            while end < n and tokens[end] not in PUNCTUATION:
                end += 1
            if end > start:
                candidates.append(Candidate(
                    span=(start, end),
                    text=" ".join(tokens[start:end]),
                    score=1.0,
                    method="rule",
                ))
            i = end
        else:
            i += 1
    return candidates


def tfidf_rank(tokens: list[str], stats: CorpusStats, top_k: int,
               stopwords: frozenset = STOPWORDS) -> list[Candidate]:
    """score(w) = (count(w)/len(tokens)) * ln((1+N)/(1+df(w))); stopwords and
    punctuation are excluded; ties break lexicographically."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not tokens:
        return []
    counts = Counter(tokens)
    total = len(tokens)
    scored = []
    for tok, c in counts.items():
        if tok in stopwords or tok in PUNCTUATION:
            continue
        scored.append((tok, (c / total) * stats.idf(tok)))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    out = []
    for tok, score in scored[:top_k]:
        first = tokens.index(tok)
        out.append(Candidate(span=(first, first + 1), text=tok,
                             score=score, method="tfidf"))
    return out


def textrank(tokens: list[str], window: int = 2, damping: float = 0.85,
             max_iter: int = 100, tol: float = 1e-6, top_k: int = 5,
             stopwords: frozenset = STOPWORDS) -> list[Candidate]:
    """Rank tokens by stationary score on the undirected co-occurrence graph.

    Stopwords and punctuation are dropped first; tokens co-occur when they
    fall inside the same sliding window over the filtered sequence. Scores
    iterate s(v) = (1-d) + d * sum_{u in adj(v)} s(u)/deg(u) to a fixed point.
    """
    filtered = [t for t in tokens if t not in stopwords and t not in PUNCTUATION]
    if not filtered:
        return []
    adj: dict[str, set[str]] = {t: set() for t in filtered}
    for i, tok in enumerate(filtered):
        for j in range(i + 1, min(i + window, len(filtered))):
            other = filtered[j]
            if other != tok:
                adj[tok].add(other)
                adj[other].add(tok)
    scores = {t: 1.0 for t in adj}
    for _ in range(max_iter):
        delta = 0.0
        new_scores = {}
        for node, neighbors in adj.items():
            rank = (1.0 - damping) + damping * sum(
                scores[u] / len(adj[u]) for u in neighbors)
            new_scores[node] = rank
            delta = max(delta, abs(rank - scores[node]))
        scores = new_scores
        if delta < tol:
            break
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    out = []
    for tok, score in ranked:
        first = tokens.index(tok)
        out.append(Candidate(span=(first, first + 1), text=tok,
                             score=score, method="textrank"))
    return out


def resolve_entity(candidates: list[Candidate], entity_index) -> str | None:
    """Map candidates onto a knowledge-graph entity by exact normalized match
    of the candidate text or its longest token sub-span.

    Among matching candidates the method order crf > rule > textrank > tfidf
    wins, then higher score.
    """
    ordered = sorted(
        candidates,
        key=lambda c: (METHOD_PRIORITY.get(c.method, 99), -c.score,
                       c.span[0], c.text))
    for cand in ordered:
        toks = tokenize(cand.text)
        for span in range(len(toks), 0, -1):
            for start in range(0, len(toks) - span + 1):
                hit = entity_index.lookup(toks[start:start + span])
                if hit is not None:
                    return hit
    return None
