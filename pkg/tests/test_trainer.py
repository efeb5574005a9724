"""Example building, the training loop, and checkpoint persistence."""

import numpy as np
import pytest

from pkchat.model import ModelConfig
from pkchat.textpipe import Scenario, Utterance, make_demo_kg, gen_synthetic_corpus
from pkchat.trainer import (
    Checkpoint,
    CheckpointError,
    TrainConfig,
    build_examples,
    from_model,
    load_checkpoint,
    save_checkpoint,
    split_scenarios,
    to_model,
    train,
    write_trace,
)
from pkchat.trainer.checkpoint import MAGIC


TOY = ModelConfig(layers=1, heads=2, hidden=16, latent=2, ffn_mult=2,
                  max_knowledge=24, max_context=24, max_response=10)


def _corpus(n=4, seed=0):
    kg = make_demo_kg(seed=seed, n_entities=max(4, n))
    return gen_synthetic_corpus(kg, seed=seed + 1, n_scenarios=n,
                                switch_fraction=0.0), kg


# -- examples -------------------------------------------------------------------

def test_one_example_per_bot_turn(tiny_scenarios):
    examples = build_examples(tiny_scenarios, seed=0)
    assert len(examples) == 4


def test_negatives_come_from_other_scenarios(tiny_scenarios):
    for ex in build_examples(tiny_scenarios, seed=3):
        own = tiny_scenarios[0 if ex.scenario_id == "s1" else 1].knowledge
        assert ex.neg_knowledge != own


def test_same_seed_same_negatives(tiny_scenarios):
    a = build_examples(tiny_scenarios, seed=5)
    b = build_examples(tiny_scenarios, seed=5)
    assert [ex.neg_knowledge for ex in a] == [ex.neg_knowledge for ex in b]


def test_negative_seed_does_not_change_order(tiny_scenarios):
    a = build_examples(tiny_scenarios, seed=5)
    b = build_examples(tiny_scenarios, seed=6)
    assert [(ex.scenario_id, ex.turn_index) for ex in a] == \
        [(ex.scenario_id, ex.turn_index) for ex in b]


def test_single_scenario_rejected(tiny_scenarios):
    with pytest.raises(ValueError, match="two scenarios"):
        build_examples(tiny_scenarios[:1], seed=0)


def test_split_is_by_scenario():
    scens, _ = _corpus(n=10)
    train_part, val_part = split_scenarios(scens, holdout_fraction=0.2, seed=1)
    assert len(val_part) == 2
    assert {s.id for s in train_part} | {s.id for s in val_part} == \
        {s.id for s in scens}
    assert not ({s.id for s in train_part} & {s.id for s in val_part})


# -- training -------------------------------------------------------------------

def test_zero_steps_checkpoint_equals_initialization():
    scens, kg = _corpus()
    cfg = TrainConfig(steps=0, batch_size=2, seed=9)
    ckpt, trace = train(scens, TOY, cfg)
    assert trace == []
    fresh = to_model(ckpt)
    from pkchat.model import DialogueModel
    from pkchat.textpipe import build_vocab
    vocab = build_vocab(scens, min_count=1, n_latent=TOY.latent)
    init = DialogueModel(ModelConfig(**{**TOY.to_dict(), "vocab_size": 0}),
                         vocab, seed=9)
    for name, tensor in init.params.items():
        np.testing.assert_array_equal(
            tensor.data.astype(np.float32), ckpt.tensors[name])


def test_training_is_bit_deterministic():
    scens, _ = _corpus()
    cfg = TrainConfig(steps=6, batch_size=2, seed=4)
    ckpt_a, trace_a = train(scens, ModelConfig(**TOY.to_dict()), cfg)
    ckpt_b, trace_b = train(scens, ModelConfig(**TOY.to_dict()), cfg)
    assert trace_a == trace_b  # float-exact records
    for name in ckpt_a.tensors:
        np.testing.assert_array_equal(ckpt_a.tensors[name], ckpt_b.tensors[name])


def test_trace_parts_always_sum(tmp_path):
    scens, _ = _corpus()
    cfg = TrainConfig(steps=5, batch_size=2, seed=1)
    _, trace = train(scens, ModelConfig(**TOY.to_dict()), cfg)
    for rec in trace:
        assert rec["total"] == rec["nll"] + rec["bow"] + rec["ts"]
    path = tmp_path / "trace.csv"
    write_trace(trace, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,nll,bow,ts,total"
    assert len(lines) == 6


def test_train_with_kg_attaches_tagger_and_stats():
    scens, kg = _corpus()
    cfg = TrainConfig(steps=2, batch_size=2, seed=1, crf_epochs=3)
    ckpt, _ = train(scens, ModelConfig(**TOY.to_dict()), cfg, kg=kg)
    assert ckpt.crf is not None
    assert "B-ENT" in ckpt.crf.tags
    assert ckpt.corpus_stats is not None and ckpt.corpus_stats.n_docs > 0


# -- checkpoints -------------------------------------------------------------------

def _fresh_checkpoint(with_kg=True):
    scens, kg = _corpus()
    cfg = TrainConfig(steps=1, batch_size=2, seed=2, crf_epochs=2)
    ckpt, _ = train(scens, ModelConfig(**TOY.to_dict()), cfg,
                    kg=kg if with_kg else None)
    return ckpt


def test_checkpoint_round_trip_bit_exact(tmp_path):
    ckpt = _fresh_checkpoint()
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    loaded = load_checkpoint(path)
    assert set(loaded.tensors) == set(ckpt.tensors)
    for name in ckpt.tensors:
        np.testing.assert_array_equal(loaded.tensors[name], ckpt.tensors[name])
    assert loaded.vocab.tokens() == ckpt.vocab.tokens()
    assert loaded.model_config.to_dict() == ckpt.model_config.to_dict()
    np.testing.assert_array_equal(loaded.crf.feature_weights.astype(np.float32),
                                  ckpt.crf.feature_weights.astype(np.float32))
    # a second save produces identical bytes
    path2 = tmp_path / "model2.ckpt"
    save_checkpoint(loaded, path2)
    assert path2.read_bytes() == path.read_bytes()


def test_checkpoint_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_version_bump_rejected(tmp_path):
    ckpt = _fresh_checkpoint(with_kg=False)
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    raw = bytearray(path.read_bytes())
    # bump the version integer inside the JSON header
    idx = raw.find(b'"format_version": 1')
    raw[idx + len(b'"format_version": ')] = ord("9")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_checkpoint_truncated_rejected(tmp_path):
    ckpt = _fresh_checkpoint(with_kg=False)
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:len(raw) - 64])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_checkpoint_shape_mismatch_names_tensor(tmp_path):
    ckpt = _fresh_checkpoint(with_kg=False)
    ckpt.tensors["head/lm/w"] = ckpt.tensors["head/lm/w"][:, :-1]
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    with pytest.raises(CheckpointError, match="head/lm/w"):
        load_checkpoint(path)


def test_to_model_restores_generation(tmp_path):
    ckpt = _fresh_checkpoint(with_kg=False)
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    model = to_model(load_checkpoint(path))
    probs, _ = model.posterior(
        [Utterance("user", "what is basalt ?")], ["basalt is_a rock"],
        ["rock"])
    assert abs(probs.sum() - 1.0) < 1e-9
