"""Automatic BIO annotation of dialogue turns against knowledge-graph entities."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Scenario
from .tokenizer import tokenize

B_ENT, I_ENT, OUT = "B-ENT", "I-ENT", "O"
TAGSET = (OUT, B_ENT, I_ENT)


@dataclass
class AnnotatedUtterance:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")
        prev = None
        for tag in self.tags:
            if tag not in TAGSET:
                raise ValueError(f"unknown tag {tag!r}")
            if tag == I_ENT and prev not in (B_ENT, I_ENT):
                raise ValueError("I-ENT must follow B-ENT or I-ENT")
            prev = tag


def auto_annotate(scenario: Scenario, entity_index) -> list[AnnotatedUtterance]:
    """Tag longest exact token-sequence matches of entity names, leftmost first.

    entity_index must expose ``match_length(tokens, start) -> int`` returning
    the longest entity match beginning at start (0 when none).
    """
    annotated = []
    for turn in scenario.turns:
        tokens = tokenize(turn.text)
        tags = [OUT] * len(tokens)
        i = 0
        while i < len(tokens):
            span = entity_index.match_length(tokens, i)
            if span > 0:
                tags[i] = B_ENT
                for j in range(i + 1, i + span):
                    tags[j] = I_ENT
                i += span
            else:
                i += 1
        annotated.append(AnnotatedUtterance(tokens, tags))
    return annotated


def save_annotations(path: str | Path, scenario_id: str,
                     annotated: list[AnnotatedUtterance], append: bool = True) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for turn_index, ann in enumerate(annotated):
            fh.write(json.dumps({
                "scenario_id": scenario_id,
                "turn_index": turn_index,
                "tokens": ann.tokens,
                "tags": ann.tags,
            }, ensure_ascii=False) + "\n")


def load_annotations(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
