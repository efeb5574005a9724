"""Tokenizer, vocabulary, corpus schema, annotation, synthetic generator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkchat.kg import EntityIndex
from pkchat.textpipe import (
    AnnotatedUtterance,
    Scenario,
    Utterance,
    auto_annotate,
    build_vocab,
    corpus_stats,
    detokenize,
    gen_synthetic_corpus,
    load_corpus,
    make_demo_kg,
    save_corpus,
    tokenize,
    unify_format,
)


# -- tokenizer ---------------------------------------------------------------

def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("What is basalt?") == ["what", "is", "basalt", "?"]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_keeps_hyphens_inside_tokens():
    assert tokenize("Mid-Ocean ridge.") == ["mid-ocean", "ridge", "."]


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=60))
def test_tokenize_detokenize_round_trips_token_lists(text):
    tokens = tokenize(text)
    assert tokenize(detokenize(tokens)) == tokens


# -- vocabulary ---------------------------------------------------------------

def _scenario(texts, knowledge=("k k k",)):
    turns = [Utterance("user" if i % 2 == 0 else "bot", t)
             for i, t in enumerate(texts)]
    return Scenario(id="v", knowledge=list(knowledge), turns=turns)


def test_build_vocab_min_count_threshold():
    scen = _scenario(["a a b", "c c c"])
    vocab = build_vocab([scen], min_count=2, n_latent=2)
    assert "a" in vocab and "c" in vocab
    assert "b" not in vocab
    assert vocab.id_of("b") == vocab.unk_id


def test_build_vocab_min_count_one_registers_everything():
    scen = _scenario(["a b", "c d"])
    vocab = build_vocab([scen], min_count=1, n_latent=2)
    for tok in ("a", "b", "c", "d", "k"):
        assert tok in vocab


def test_vocab_specials_occupy_lowest_ids():
    vocab = build_vocab([_scenario(["x y", "z w"])], min_count=1, n_latent=3)
    assert vocab.pad_id == 0
    ids = [vocab.pad_id, vocab.unk_id, vocab.bos_id, vocab.eos_id,
           vocab.status_id, vocab.ksep_id]
    assert ids == list(range(6))
    assert vocab.latent_id(0) == 6 and vocab.latent_id(2) == 8


def test_vocab_bijection():
    vocab = build_vocab([_scenario(["q r s", "t u v"])], min_count=1, n_latent=2)
    for idx in range(len(vocab)):
        assert vocab.id_of(vocab.token_of(idx)) == idx


def test_build_vocab_rejects_empty_corpus():
    with pytest.raises(ValueError, match="empty"):
        build_vocab([], min_count=1, n_latent=2)


# -- corpus schema & unification ----------------------------------------------

def test_scenario_enforces_alternation():
    with pytest.raises(ValueError, match="alternate"):
        Scenario(id="bad", knowledge=["k"],
                 turns=[Utterance("bot", "hi"), Utterance("user", "yo")])


def test_unify_merges_goal_knowledge_profile_in_order():
    scen = unify_format({
        "id": "d1",
        "goal": "talk about basalt",
        "knowledge": ["basalt is_a igneous rock", "basalt formed_by lava"],
        "profile": ["likes geology"],
        "turns": [{"role": "user", "text": "hi"}, {"role": "bot", "text": "hello"}],
    })
    assert scen.knowledge == ["talk about basalt", "basalt is_a igneous rock",
                              "basalt formed_by lava", "likes geology"]
    assert scen.goal == "talk about basalt"


def test_unify_duconv_style_counts():
    scen = unify_format({
        "goal": "g",
        "knowledge": ["k1", "k2"],
        "turns": ["hi", "hello"],
    })
    assert len(scen.knowledge) == 3


def test_unify_without_goal_keeps_knowledge_only():
    scen = unify_format({
        "knowledge": ["k1", "k2"],
        "turns": ["hi", "hello"],
    })
    assert scen.knowledge == ["k1", "k2"]
    assert scen.goal is None


def test_unify_preserves_turn_count_and_order():
    texts = ["a", "b", "c", "d"]
    scen = unify_format({"knowledge": ["k"], "turns": texts})
    assert [t.text for t in scen.turns] == texts


def test_unify_rejects_missing_turns():
    with pytest.raises(ValueError, match="turns"):
        unify_format({"knowledge": ["k"], "turns": []})


def test_corpus_round_trip(tmp_path, tiny_scenarios):
    path = tmp_path / "corpus.jsonl"
    save_corpus(tiny_scenarios, path)
    loaded = load_corpus(path)
    assert [s.id for s in loaded] == [s.id for s in tiny_scenarios]
    assert loaded[0].knowledge == tiny_scenarios[0].knowledge
    assert [t.text for t in loaded[1].turns] == [
        t.text for t in tiny_scenarios[1].turns]


# -- corpus stats ---------------------------------------------------------------

def _stats_fixture(n_scenarios, total_rounds):
    base = total_rounds // n_scenarios
    extra = total_rounds - base * n_scenarios
    scens = []
    for i in range(n_scenarios):
        rounds = base + (1 if i < extra else 0)
        rounds = max(rounds, 2)
        turns = [Utterance("user" if j % 2 == 0 else "bot", f"t{j}")
                 for j in range(rounds)]
        scens.append(Scenario(id=f"s{i}", knowledge=["k"], turns=turns))
    return scens


def test_corpus_stats_part1_counts():
    scens = _stats_fixture(550, 3615)
    stats = corpus_stats(scens)
    assert stats["scenarios"] == 550 and stats["rounds"] == 3615
    assert stats["avg_rounds"] == 6.57


def test_corpus_stats_full_counts():
    scens = _stats_fixture(1000, 8219)
    stats = corpus_stats(scens)
    assert stats["avg_rounds"] == 8.21


def test_corpus_stats_single_scenario():
    scens = _stats_fixture(1, 4)
    assert corpus_stats(scens)["avg_rounds"] == 4.00


# -- annotation -----------------------------------------------------------------

def test_auto_annotate_single_token_entity(fixture_kg):
    scen = Scenario(id="a", knowledge=["k"], turns=[
        Utterance("user", "basalt is my favorite"),
        Utterance("bot", "nice"),
    ])
    ann = auto_annotate(scen, EntityIndex(fixture_kg))
    assert ann[0].tags == ["B-ENT", "O", "O", "O"]


def test_auto_annotate_multiword_longest_match(fixture_kg):
    scen = Scenario(id="a", knowledge=["k"], turns=[
        Utterance("user", "igneous rock forms"),
        Utterance("bot", "yes"),
    ])
    ann = auto_annotate(scen, EntityIndex(fixture_kg))
    assert ann[0].tags == ["B-ENT", "I-ENT", "O"]


def test_auto_annotate_no_entities_all_outside(fixture_kg):
    scen = Scenario(id="a", knowledge=["k"], turns=[
        Utterance("user", "hello there friend"),
        Utterance("bot", "hi"),
    ])
    ann = auto_annotate(scen, EntityIndex(fixture_kg))
    assert set(ann[0].tags) == {"O"}


def test_annotated_utterance_rejects_dangling_inside_tag():
    with pytest.raises(ValueError, match="I-ENT"):
        AnnotatedUtterance(tokens=["a", "b"], tags=["O", "I-ENT"])


def test_auto_annotate_always_satisfies_bio(fixture_kg):
    index = EntityIndex(fixture_kg)
    rng = np.random.default_rng(0)
    words = ["basalt", "igneous", "rock", "lava", "granite", "the", "of"]
    for _ in range(25):
        n = int(rng.integers(1, 9))
        text = " ".join(words[int(rng.integers(len(words)))] for _ in range(n))
        scen = Scenario(id="r", knowledge=["k"], turns=[
            Utterance("user", text), Utterance("bot", "ok")])
        for ann in auto_annotate(scen, index):
            AnnotatedUtterance(ann.tokens, ann.tags)  # validates BIO


# -- synthetic corpus -------------------------------------------------------------

def test_synthetic_deterministic_under_seed():
    kg = make_demo_kg(seed=3, n_entities=6)
    a = gen_synthetic_corpus(kg, seed=5, n_scenarios=5)
    b = gen_synthetic_corpus(kg, seed=5, n_scenarios=5)
    assert [(s.id, s.knowledge, [(t.role, t.text) for t in s.turns])
            for s in a] == [(s.id, s.knowledge, [(t.role, t.text) for t in s.turns])
                            for s in b]


def test_synthetic_knowledge_is_full_neighborhood(fixture_kg):
    scens = gen_synthetic_corpus(fixture_kg, seed=1, n_scenarios=4,
                                 switch_fraction=0.0)
    basalt = next(s for s in scens if any("basalt" in k for k in s.knowledge))
    assert len(basalt.knowledge) == 2  # basalt has exactly 2 outgoing triples


def test_synthetic_switch_fraction_zero_single_topic():
    kg = make_demo_kg(seed=3, n_entities=8)  # 5 triples per head, no inbound
    single = gen_synthetic_corpus(kg, seed=5, n_scenarios=8, switch_fraction=0.0)
    assert all(len(s.knowledge) == 5 for s in single)
    switched = gen_synthetic_corpus(kg, seed=5, n_scenarios=8, switch_fraction=1.0)
    assert all(len(s.knowledge) == 10 for s in switched)


def test_synthetic_bot_turns_quote_knowledge_tails():
    kg = make_demo_kg(seed=3, n_entities=8)
    scens = gen_synthetic_corpus(kg, seed=9, n_scenarios=8, switch_fraction=0.5)
    for s in scens:
        tails = []
        for line in s.knowledge:  # lines are "<head> <relation> <tail>"
            rel = next(tok for tok in line.split() if "_" in tok)
            tails.append(line.split(f" {rel} ", 1)[1])
        for turn in s.turns:
            if turn.role == "bot":
                assert any(tail in turn.text for tail in tails)


def test_synthetic_rejects_bad_args(fixture_kg):
    with pytest.raises(ValueError, match="n_scenarios"):
        gen_synthetic_corpus(fixture_kg, seed=0, n_scenarios=0)


def test_annotation_sidecar_round_trip(tmp_path, fixture_kg):
    from pkchat.kg import EntityIndex
    from pkchat.textpipe import load_annotations, save_annotations

    scen = Scenario(id="sc", knowledge=["k"], turns=[
        Utterance("user", "basalt is igneous rock"),
        Utterance("bot", "indeed"),
    ])
    ann = auto_annotate(scen, EntityIndex(fixture_kg))
    path = tmp_path / "annotations.jsonl"
    save_annotations(path, scen.id, ann, append=False)
    rows = load_annotations(path)
    assert len(rows) == 2
    assert rows[0]["scenario_id"] == "sc"
    assert rows[0]["turn_index"] == 0
    assert rows[0]["tokens"] == ann[0].tokens
    assert rows[0]["tags"] == ann[0].tags
