"""Deterministic synthetic dialogue corpus over a toy geology knowledge graph.

Scenarios anchor a sampled head entity, carry its full linearized neighborhood
as knowledge, and hold template question/answer rounds whose bot replies quote
tail entities verbatim. A configurable fraction of scenarios switches topic to
a second entity mid-dialogue. Everything derives from the seed.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .corpus import Scenario, Utterance

if TYPE_CHECKING:  # deferred: the kg module imports this package at runtime
    from ..kg import TripleStore

_BASE_ROCKS = [
    "basalt", "granite", "obsidian", "pumice", "shale", "slate", "marble",
    "quartzite", "gneiss", "schist", "andesite", "rhyolite", "gabbro",
    "diorite", "dolomite", "limestone", "sandstone", "chalk", "flint",
    "chert", "tuff", "breccia", "scoria", "mudstone",
]
_MODIFIERS = ["banded", "coarse", "fine", "dark", "pale", "polished"]

_CLASS_TAILS = ["igneous rock", "sedimentary rock", "metamorphic rock",
                "volcanic glass", "mineral ore", "plutonic rock",
                "clastic rock", "crystalline ore"]
_PROCESS_TAILS = ["lava cooling", "magma intrusion", "sediment compaction",
                  "heat and pressure", "volcanic eruption",
                  "chemical precipitation", "glacial grinding",
                  "wind erosion", "slow crystallization"]
_MINERALS = ["quartz", "feldspar", "mica", "olivine", "calcite", "pyroxene",
             "amphibole", "garnet", "hornblende", "biotite", "magnetite",
             "zircon"]

QUESTION_TEMPLATES = [
    "what is the {rel} of {head} ?",
    "which is the {rel} of {head} ?",
    "tell me the {rel} of {head} .",
    "do you know the {rel} of {head} ?",
    "could you share the {rel} of {head} ?",
    "i would like to know the {rel} of {head} .",
    "please give the {rel} of {head} .",
    "what would be the {rel} of {head} ?",
]
# one canonical reply shape: the reply is then a pure function of the visible
# question and knowledge (relation and head echoed, tail quoted), which is
# what lets a desk-scale model learn the copy rule instead of memorizing
ANSWER_TEMPLATE = "the {rel} of {head} is {tail} ."


def _answer_for(head: str, rel: str, tail: str) -> str:
    return ANSWER_TEMPLATE.format(rel=rel, head=head, tail=tail)


_SYLLABLES = ["tor", "mel", "var", "kel", "dun", "rav", "sol", "nim", "gar",
              "pel", "vos", "tal", "rin", "bor", "zan", "hul", "fen", "mor"]


def _invented_name(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        n = 2 + int(rng.integers(2))
        name = "".join(_SYLLABLES[int(rng.integers(len(_SYLLABLES)))]
                       for _ in range(n))
        if name not in used:
            used.add(name)
            return name


def make_demo_kg(seed: int = 0, n_entities: int = 24,
                 rare_fraction: float = 0.4) -> "TripleStore":
    """A small deterministic geology graph. Every head entity gets an is_a,
    formed_by, composed_of, found_in, and catalogued_as triple. Tails mix
    shared pools with unique invented variants in every relation (always for
    found_in basins and specimen codes, with probability rare_fraction for
    the rest), so a min_count vocabulary threshold maps rare tail tokens to
    [UNK] at every answer position and only the pointer can emit them."""
    from ..kg import Triple, TripleStore

    rng = np.random.default_rng(seed)
    names: list[str] = []
    for name in _BASE_ROCKS:
        if len(names) >= n_entities:
            break
        names.append(name)
    while len(names) < n_entities:
        mod = _MODIFIERS[int(rng.integers(len(_MODIFIERS)))]
        base = _BASE_ROCKS[int(rng.integers(len(_BASE_ROCKS)))]
        combined = f"{mod} {base}"
        if combined not in names:
            names.append(combined)
    used_names: set[str] = set()
    codes: set[str] = set()
    triples = []
    letters = "bcdfghjklmnpqrstvwxz"

    def rare() -> bool:
        return float(rng.random()) < rare_fraction

    for head in names:
        if rare():
            noun = ["rock", "ore", "glass"][int(rng.integers(3))]
            class_tail = f"{_invented_name(rng, used_names)} {noun}"
        else:
            class_tail = _CLASS_TAILS[int(rng.integers(len(_CLASS_TAILS)))]
        triples.append(Triple(head, "is_a", class_tail))

        if rare():
            noun = ["cooling", "erosion", "intrusion", "compaction"][
                int(rng.integers(4))]
            process_tail = f"{_invented_name(rng, used_names)} {noun}"
        else:
            process_tail = _PROCESS_TAILS[int(rng.integers(len(_PROCESS_TAILS)))]
        triples.append(Triple(head, "formed_by", process_tail))

        if rare():
            mineral_tail = f"{_invented_name(rng, used_names)}ite"
        else:
            mineral_tail = _MINERALS[int(rng.integers(len(_MINERALS)))]
        triples.append(Triple(head, "composed_of", mineral_tail))

        basin = _invented_name(rng, used_names)
        triples.append(Triple(head, "found_in", f"the {basin} basin"))
        while True:
            code = (letters[int(rng.integers(len(letters)))]
                    + letters[int(rng.integers(len(letters)))]
                    + str(int(rng.integers(100, 1000))))
            if code not in codes:
                codes.add(code)
                break
        triples.append(Triple(head, "catalogued_as", f"specimen {code}"))
    return TripleStore(triples)


def _qa_rounds(rng: np.random.Generator, head: str, edges, n_rounds: int
               ) -> list[Utterance]:
    out_edges = [e for e in edges if e.direction == "out"]
    n_rounds = min(n_rounds, len(out_edges))
    picks = rng.choice(len(out_edges), size=n_rounds, replace=False)
    turns = []
    for idx in picks:
        edge = out_edges[int(idx)]
        question = QUESTION_TEMPLATES[int(rng.integers(len(QUESTION_TEMPLATES)))]
        turns.append(Utterance("user", question.format(rel=edge.relation, head=head)))
        turns.append(Utterance("bot", _answer_for(head, edge.relation, edge.neighbor)))
    return turns


def gen_synthetic_corpus(kg: "TripleStore", seed: int, n_scenarios: int,
                         switch_fraction: float = 0.25,
                         min_rounds: int = 2, max_rounds: int = 4) -> list[Scenario]:
    from ..kg import linearize

    if n_scenarios < 1:
        raise ValueError("n_scenarios must be >= 1")
    if len(kg) == 0:
        raise ValueError("knowledge graph is empty")
    rng = np.random.default_rng(seed)
    heads = kg.head_entities()
    replace = n_scenarios > len(heads)
    anchor_idx = rng.choice(len(heads), size=n_scenarios, replace=replace)
    n_switch = int(round(switch_fraction * n_scenarios))
    switch_set = set(
        int(i) for i in rng.choice(n_scenarios, size=n_switch, replace=False))

    scenarios = []
    for i in range(n_scenarios):
        head = heads[int(anchor_idx[i])]
        edges = kg.neighborhood(head)
        knowledge = linearize(edges, head)
        n_rounds = int(rng.integers(min_rounds, max_rounds + 1))
        turns = _qa_rounds(rng, head, edges, n_rounds)
        if i in switch_set and len(heads) > 1:
            while True:
                other = heads[int(rng.integers(len(heads)))]
                if other != head:
                    break
            other_edges = kg.neighborhood(other)
            knowledge = knowledge + linearize(other_edges, other)
            turns = turns + _qa_rounds(rng, other, other_edges, 1)
        scenarios.append(Scenario(
            id=f"syn-{i:04d}", knowledge=knowledge, goal=None, turns=turns))
    return scenarios
