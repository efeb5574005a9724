"""Feature-based linear-chain CRF for BIO entity tagging.

Training maximizes the conditional log-likelihood by full-batch gradient
ascent; the forward algorithm supplies the log-partition, forward-backward
the expected feature counts, and Viterbi the decode. The dynamic programs
run on the shared kernels (numba or numpy).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..textpipe.annotate import AnnotatedUtterance, B_ENT, I_ENT, OUT
from .extract import Candidate

NEG_INF = -1e4  # effectively forbids a transition; exp(NEG_INF) underflows to 0

FEATURE_EXTRACTOR_ID = "window-v1"


def _shape_of(token: str) -> str:
    shape = []
    for ch in token:
        if ch.isalpha():
            code = "x"
        elif ch.isdigit():
            code = "d"
        else:
            code = ch
        if not shape or shape[-1] != code:
            shape.append(code)
    return "".join(shape)


def extract_features(tokens: list[str], i: int) -> list[str]:
    tok = tokens[i]
    feats = [f"w={tok}", f"shape={_shape_of(tok)}"]
    for k in (1, 2, 3):
        if len(tok) >= k:
            feats.append(f"pre{k}={tok[:k]}")
            feats.append(f"suf{k}={tok[-k:]}")
    feats.append(f"prev={tokens[i - 1]}" if i > 0 else "prev=<s>")
    feats.append(f"next={tokens[i + 1]}" if i + 1 < len(tokens) else "next=</s>")
    return feats


@dataclass
class CrfModel:
    tags: list[str]
    feature_index: dict[str, int]
    feature_weights: np.ndarray  # (n_features, n_tags)
    transitions: np.ndarray      # (n_tags, n_tags)
    start: np.ndarray            # (n_tags,)
    stop: np.ndarray             # (n_tags,)
    feature_extractor: str = FEATURE_EXTRACTOR_ID
    history: list[float] = field(default_factory=list, repr=False)

    def tag_id(self, tag: str) -> int:
        return self.tags.index(tag)

    def emissions(self, tokens: list[str]) -> np.ndarray:
        out = np.zeros((len(tokens), len(self.tags)))
        for i in range(len(tokens)):
            for feat in extract_features(tokens, i):
                fid = self.feature_index.get(feat)
                if fid is not None:
                    out[i] += self.feature_weights[fid]
        return out

    def forbidden_mask(self) -> tuple[np.ndarray, np.ndarray]:
        """(transition mask, start mask) of entries pinned to NEG_INF: an
        inside tag may only follow its own begin/inside tag, and never opens."""
        k = len(self.tags)
        trans = np.zeros((k, k), dtype=bool)
        start = np.zeros(k, dtype=bool)
        for j, tag in enumerate(self.tags):
            if not tag.startswith("I-"):
                continue
            kind = tag[2:]
            start[j] = True
            for i, prev in enumerate(self.tags):
                if prev not in (f"B-{kind}", f"I-{kind}"):
                    trans[i, j] = True
        return trans, start


def sequence_score(model: CrfModel, emissions: np.ndarray, tag_ids: list[int]) -> float:
    score = model.start[tag_ids[0]] + emissions[0, tag_ids[0]]
    for t in range(1, len(tag_ids)):
        score += model.transitions[tag_ids[t - 1], tag_ids[t]] + emissions[t, tag_ids[t]]
    return float(score + model.stop[tag_ids[-1]])


def log_partition(model: CrfModel, emissions: np.ndarray) -> float:
    return float(kernels.crf_log_norm(emissions, model.transitions,
                                      model.start, model.stop))


def log_likelihood(model: CrfModel, annotated: list[AnnotatedUtterance]) -> float:
    total = 0.0
    n = 0
    for ann in annotated:
        if not ann.tokens:
            continue
        emissions = model.emissions(ann.tokens)
        tag_ids = [model.tag_id(t) for t in ann.tags]
        total += sequence_score(model, emissions, tag_ids) - log_partition(model, emissions)
        n += 1
    return total / max(n, 1)


def _canonical_tags(annotated: list[AnnotatedUtterance]) -> list[str]:
    seen = {t for ann in annotated for t in ann.tags}
    ordered = [t for t in (OUT, B_ENT, I_ENT) if t in seen]
    ordered.extend(sorted(seen - set(ordered)))
    return ordered


def crf_train(annotated: list[AnnotatedUtterance], epochs: int = 30,
              lr: float = 0.1, l2: float = 0.0) -> CrfModel:
    """Full-batch gradient ascent on the mean conditional log-likelihood.

    Deterministic: weights start at zero and no sampling is involved.
    """
    usable = [a for a in annotated if a.tokens]
    if not usable:
        raise ValueError("cannot train a tagger on an empty corpus")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")

    tags = _canonical_tags(usable)
    k = len(tags)
    tag_of = {t: i for i, t in enumerate(tags)}

    feature_index: dict[str, int] = {}
    prepared = []
    for ann in usable:
        fids_per_pos = []
        for i in range(len(ann.tokens)):
            fids = []
            for feat in extract_features(ann.tokens, i):
                fid = feature_index.setdefault(feat, len(feature_index))
                fids.append(fid)
            fids_per_pos.append(np.array(fids, dtype=np.int64))
        tag_ids = np.array([tag_of[t] for t in ann.tags], dtype=np.int64)
        prepared.append((fids_per_pos, tag_ids))

    model = CrfModel(
        tags=tags,
        feature_index=feature_index,
        feature_weights=np.zeros((len(feature_index), k)),
        transitions=np.zeros((k, k)),
        start=np.zeros(k),
        stop=np.zeros(k),
    )
    trans_pin, start_pin = model.forbidden_mask()
    model.transitions[trans_pin] = NEG_INF
    model.start[start_pin] = NEG_INF

    n = len(prepared)
    for _ in range(epochs):
        grad_w = np.zeros_like(model.feature_weights)
        grad_trans = np.zeros_like(model.transitions)
        grad_start = np.zeros_like(model.start)
        grad_stop = np.zeros_like(model.stop)
        ll = 0.0
        for fids_per_pos, tag_ids in prepared:
            t_len = len(fids_per_pos)
            emissions = np.zeros((t_len, k))
            for i, fids in enumerate(fids_per_pos):
                emissions[i] = model.feature_weights[fids].sum(axis=0)
            node, edge, log_z = kernels.crf_marginals(
                emissions, model.transitions, model.start, model.stop)
            # observed minus expected counts
            for i, fids in enumerate(fids_per_pos):
                delta = -node[i]
                delta[tag_ids[i]] += 1.0
                grad_w[fids] += delta
            grad_start -= node[0]
            grad_start[tag_ids[0]] += 1.0
            grad_stop -= node[-1]
            grad_stop[tag_ids[-1]] += 1.0
            if t_len > 1:
                grad_trans -= edge.sum(axis=0)
                for t in range(1, t_len):
                    grad_trans[tag_ids[t - 1], tag_ids[t]] += 1.0
            path_score = model.start[tag_ids[0]] + emissions[0, tag_ids[0]]
            for t in range(1, t_len):
                path_score += (model.transitions[tag_ids[t - 1], tag_ids[t]]
                               + emissions[t, tag_ids[t]])
            ll += float(path_score + model.stop[tag_ids[-1]] - log_z)
        model.feature_weights += lr * (grad_w / n - l2 * model.feature_weights)
        model.transitions += lr * (grad_trans / n - l2 * model.transitions)
        model.start += lr * (grad_start / n - l2 * model.start)
        model.stop += lr * (grad_stop / n - l2 * model.stop)
        model.transitions[trans_pin] = NEG_INF
        model.start[start_pin] = NEG_INF
        model.history.append(ll / n)
    return model


def crf_tag(tokens: list[str], model: CrfModel) -> list[str]:
    """Viterbi-optimal tag path; invalid BIO transitions carry NEG_INF weight."""
    if not tokens:
        return []
    if len(model.tags) == 1:
        return [model.tags[0]] * len(tokens)
    emissions = model.emissions(tokens)
    path, _ = kernels.crf_viterbi(emissions, model.transitions,
                                  model.start, model.stop)
    return [model.tags[int(i)] for i in path]


def tags_to_candidates(tokens: list[str], tags: list[str]) -> list[Candidate]:
    """Collect B/I spans into crf-method candidates."""
    out = []
    start = None
    for i, tag in enumerate(tags + [OUT]):
        if tag.startswith("B-"):
            if start is not None:
                out.append((start, i))
            start = i
        elif not tag.startswith("I-"):
            if start is not None:
                out.append((start, i))
            start = None
    return [Candidate(span=(s, e), text=" ".join(tokens[s:e]), score=1.0,
                      method="crf") for s, e in out]
