import numpy as np
import pytest

from pkchat.kg import Triple, TripleStore
from pkchat.model import ModelConfig, DialogueModel
from pkchat.textpipe import Scenario, Utterance, Vocab, build_vocab


@pytest.fixture
def fixture_kg() -> TripleStore:
    return TripleStore([
        Triple("basalt", "is_a", "igneous rock"),
        Triple("basalt", "formed_by", "lava cooling"),
        Triple("granite", "is_a", "igneous rock"),
    ])


@pytest.fixture
def tiny_scenarios() -> list[Scenario]:
    return [
        Scenario(
            id="s1",
            knowledge=["basalt is_a igneous rock", "basalt formed_by lava cooling"],
            turns=[
                Utterance("user", "what is the formed_by of basalt ?"),
                Utterance("bot", "the formed_by of basalt is lava cooling ."),
                Utterance("user", "what is the is_a of basalt ?"),
                Utterance("bot", "the is_a of basalt is igneous rock ."),
            ],
        ),
        Scenario(
            id="s2",
            knowledge=["granite is_a igneous rock", "granite found_in the cliffs"],
            turns=[
                Utterance("user", "what is the is_a of granite ?"),
                Utterance("bot", "the is_a of granite is igneous rock ."),
                Utterance("user", "where is granite found ?"),
                Utterance("bot", "granite is found_in the cliffs ."),
            ],
        ),
    ]


@pytest.fixture
def tiny_vocab(tiny_scenarios) -> Vocab:
    return build_vocab(tiny_scenarios, min_count=1, n_latent=3)


@pytest.fixture
def tiny_model(tiny_scenarios, tiny_vocab) -> DialogueModel:
    config = ModelConfig(layers=2, heads=2, hidden=16, latent=3,
                         max_knowledge=32, max_context=32, max_response=12,
                         ffn_mult=2)
    return DialogueModel(config, tiny_vocab, seed=7)
