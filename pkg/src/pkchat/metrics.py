"""Automatic evaluation: sentence-averaged BLEU-1/2, corpus Distinct-1/2,
and token-overlap knowledge recall/precision/F1, plus the corpus runner."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .model.generate import DecodeConfig, generate
from .textpipe.corpus import Scenario
from .textpipe.tokenizer import PUNCTUATION, STOPWORDS, tokenize


@dataclass
class EvalPair:
    generated: list[str]
    reference: list[str]
    knowledge: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.reference:
            raise ValueError("reference tokens must be non-empty")


@dataclass
class EvalReport:
    bleu1: float
    bleu2: float
    distinct1: float
    distinct2: float
    knowledge_recall: float
    knowledge_precision: float
    knowledge_f1: float
    pairs: int

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1, "bleu2": self.bleu2,
            "distinct1": self.distinct1, "distinct2": self.distinct2,
            "knowledge_recall": self.knowledge_recall,
            "knowledge_precision": self.knowledge_precision,
            "knowledge_f1": self.knowledge_f1, "pairs": self.pairs,
        }

    def table(self) -> str:
        rows = [
            ("BLEU-1", self.bleu1), ("BLEU-2", self.bleu2),
            ("Distinct-1", self.distinct1), ("Distinct-2", self.distinct2),
            ("Knowledge R", self.knowledge_recall),
            ("Knowledge P", self.knowledge_precision),
            ("Knowledge F1", self.knowledge_f1),
        ]
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value:.4f}" for name, value in rows]
        lines.append(f"{'pairs':<{width}}  {self.pairs}")
        return "\n".join(lines)


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def _sentence_bleu(generated: list[str], reference: list[str], n: int) -> float:
    """Cumulative BLEU-n: clipped modified precision with uniform 1/n weights,
    add-one smoothing for orders >= 2, brevity penalty when the candidate is
    shorter than the reference."""
    if not generated:
        return 0.0
    log_sum = 0.0
    for order in range(1, n + 1):
        gen_grams = Counter(_ngrams(generated, order))
        ref_grams = Counter(_ngrams(reference, order))
        matches = sum(min(c, ref_grams[g]) for g, c in gen_grams.items())
        total = max(sum(gen_grams.values()), 0)
        if order >= 2:
            matches += 1
            total += 1
        if matches == 0 or total == 0:
            return 0.0
        log_sum += math.log(matches / total) / n
    brevity = 1.0
    if len(generated) < len(reference):
        brevity = math.exp(1.0 - len(reference) / len(generated))
    return brevity * math.exp(log_sum)


def bleu_n(pairs: list[EvalPair], n: int) -> float:
    if n not in (1, 2):
        raise ValueError("only BLEU-1 and BLEU-2 are computed here")
    if not pairs:
        return 0.0
    return sum(_sentence_bleu(p.generated, p.reference, n) for p in pairs) / len(pairs)


def distinct_n(responses: list[list[str]], n: int) -> float:
    """Corpus-level ratio of distinct n-grams to total n-grams."""
    total = 0
    distinct: set[tuple[str, ...]] = set()
    for tokens in responses:
        grams = _ngrams(tokens, n)
        total += len(grams)
        distinct.update(grams)
    return len(distinct) / total if total else 0.0


def _content_set(tokens: list[str], stopwords) -> set[str]:
    return {t for t in tokens if t not in stopwords and t not in PUNCTUATION}


def knowledge_prf(pairs: list[EvalPair],
                  stopwords=STOPWORDS) -> tuple[float, float, float]:
    """Macro-averaged token-set overlap between responses and gold knowledge."""
    if not pairs:
        return 0.0, 0.0, 0.0
    r_sum = p_sum = f_sum = 0.0
    for pair in pairs:
        k_set = _content_set(
            [t for line in pair.knowledge for t in tokenize(line)], stopwords)
        g_set = _content_set(pair.generated, stopwords)
        hit = len(g_set & k_set)
        precision = hit / len(g_set) if g_set else 0.0
        recall = hit / len(k_set) if k_set else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if (precision + recall) else 0.0)
        r_sum += recall
        p_sum += precision
        f_sum += f1
    n = len(pairs)
    return r_sum / n, p_sum / n, f_sum / n


def eval_pairs(pairs: list[EvalPair], stopwords=STOPWORDS) -> EvalReport:
    recall, precision, f1 = knowledge_prf(pairs, stopwords)
    responses = [p.generated for p in pairs]
    return EvalReport(
        bleu1=bleu_n(pairs, 1), bleu2=bleu_n(pairs, 2),
        distinct1=distinct_n(responses, 1), distinct2=distinct_n(responses, 2),
        knowledge_recall=recall, knowledge_precision=precision,
        knowledge_f1=f1, pairs=len(pairs))


def build_eval_pairs(model, scenarios: list[Scenario],
                     decode: DecodeConfig | None = None) -> list[EvalPair]:
    """Generate for every bot turn with the gold (teacher-forced) history."""
    pairs = []
    for scen in scenarios:
        for turn_index in scen.bot_turn_indices():
            result = generate(model, list(scen.turns[:turn_index]),
                              list(scen.knowledge), decode)
            pairs.append(EvalPair(
                generated=result.tokens,
                reference=tokenize(scen.turns[turn_index].text),
                knowledge=list(scen.knowledge)))
    return pairs


def run_eval(model, scenarios: list[Scenario],
             decode: DecodeConfig | None = None) -> EvalReport:
    if not scenarios:
        raise ValueError("no scenarios to evaluate")
    return eval_pairs(build_eval_pairs(model, scenarios, decode))


def write_report(report: EvalReport, path: str | Path,
                 provenance: dict | None = None) -> None:
    payload = report.to_dict()
    if provenance:
        payload["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
