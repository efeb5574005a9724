"""Training examples: one per bot turn, with sampled other-topic negatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..textpipe.corpus import Scenario, Utterance
from ..textpipe.tokenizer import tokenize


@dataclass
class TrainExample:
    scenario_id: str
    turn_index: int
    context: list[Utterance]
    knowledge: list[str]
    response: str
    neg_knowledge: list[str]

    def response_tokens(self) -> list[str]:
        return tokenize(self.response)


def build_examples(scenarios: list[Scenario], seed: int) -> list[TrainExample]:
    """One example per bot turn; negative knowledge is sampled uniformly from
    the other scenarios. Example order is fixed by the corpus; the seed only
    drives the negative assignment."""
    if len(scenarios) < 2:
        raise ValueError(
            "need at least two scenarios so negatives can come from another topic")
    rng = np.random.default_rng(seed)
    examples = []
    for idx, scen in enumerate(scenarios):
        for turn_index in scen.bot_turn_indices():
            while True:
                other = int(rng.integers(len(scenarios)))
                if other != idx:
                    break
            examples.append(TrainExample(
                scenario_id=scen.id,
                turn_index=turn_index,
                context=list(scen.turns[:turn_index]),
                knowledge=list(scen.knowledge),
                response=scen.turns[turn_index].text,
                neg_knowledge=list(scenarios[other].knowledge),
            ))
    return examples


def split_scenarios(scenarios: list[Scenario], holdout_fraction: float = 0.1,
                    seed: int = 0) -> tuple[list[Scenario], list[Scenario]]:
    """Split by scenario (never by turn) so knowledge cannot leak across."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(scenarios))
    n_holdout = max(1, int(round(holdout_fraction * len(scenarios))))
    holdout = {int(i) for i in order[:n_holdout]}
    train = [s for i, s in enumerate(scenarios) if i not in holdout]
    val = [s for i, s in enumerate(scenarios) if i in holdout]
    return train, val
