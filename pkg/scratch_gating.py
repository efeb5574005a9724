"""Scratch validation of the 2-topic gating experiment (not shipped)."""
import time

import numpy as np

from pkchat.kg import Triple, TripleStore
from pkchat.model import ModelConfig
from pkchat.textpipe import gen_synthetic_corpus, make_demo_kg, tokenize
from pkchat.trainer import TrainConfig, to_model, train

INSTRUMENT_TRIPLES = [
    ("oboe", "member_of", "woodwind family"), ("oboe", "played_with", "a reed"),
    ("oboe", "made_of", "grenadilla wood"), ("oboe", "tuned_to", "concert pitch"),
    ("violin", "member_of", "string family"), ("violin", "played_with", "a bow"),
    ("violin", "made_of", "maple wood"), ("violin", "tuned_to", "perfect fifths"),
    ("cello", "member_of", "string family"), ("cello", "played_with", "a bow"),
    ("cello", "made_of", "spruce wood"), ("cello", "tuned_to", "perfect fifths"),
    ("flute", "member_of", "woodwind family"), ("flute", "played_with", "air stream"),
    ("flute", "made_of", "silver alloy"), ("flute", "tuned_to", "concert pitch"),
    ("trumpet", "member_of", "brass family"), ("trumpet", "played_with", "three valves"),
    ("trumpet", "made_of", "brass tubing"), ("trumpet", "tuned_to", "b flat"),
    ("harp", "member_of", "string family"), ("harp", "played_with", "both hands"),
    ("harp", "made_of", "spruce wood"), ("harp", "tuned_to", "pedal settings"),
]


def main():
    t0 = time.time()
    rocks_kg = make_demo_kg(seed=21, n_entities=8, rare_fraction=0.8)
    music_kg = TripleStore([Triple(*t) for t in INSTRUMENT_TRIPLES])

    rock_train = gen_synthetic_corpus(rocks_kg, seed=22, n_scenarios=8,
                                      switch_fraction=0.0)
    music_train = gen_synthetic_corpus(music_kg, seed=23, n_scenarios=8,
                                       switch_fraction=0.0)
    corpus = rock_train + music_train
    # entity-anonymous training: topic features (relations, shared pool
    # nouns), not entity identity, must carry the match decision
    exclude = set()
    for kg in (rocks_kg, music_kg):
        for head in kg.head_entities():
            exclude.update(tokenize(head))

    config = ModelConfig(layers=2, heads=2, hidden=32, latent=2, ffn_mult=2,
                         max_knowledge=48, max_context=32, max_response=12)
    ckpt, trace = train(corpus, config,
                        TrainConfig(steps=500, batch_size=8, seed=7, min_count=3),
                        vocab_exclude=exclude)
    model = to_model(ckpt)
    print(f"train {time.time()-t0:.0f}s; final ts loss {trace[-1]['ts']:.4f}")

    rock_held = gen_synthetic_corpus(rocks_kg, seed=31, n_scenarios=4,
                                     switch_fraction=0.0)
    music_held = gen_synthetic_corpus(music_kg, seed=32, n_scenarios=4,
                                      switch_fraction=0.0)
    match_scores, mismatch_scores = [], []
    decisions = []
    for own, other in ((rock_held, music_held), (music_held, rock_held)):
        for scen, foreign in zip(own, other):
            for i, turn in enumerate(scen.turns):
                if turn.role != "user":
                    continue
                history = list(scen.turns[:i])
                match = model.topic_switch_score(scen.knowledge, history,
                                                 tokenize(turn.text))
                mismatch = model.topic_switch_score(foreign.knowledge, history,
                                                    tokenize(turn.text))
                match_scores.append(match)
                mismatch_scores.append(mismatch)
                decisions.append(match >= 0.5)
                decisions.append(mismatch < 0.5)
    acc = float(np.mean(decisions))
    print(f"match mean {np.mean(match_scores):.3f} min {np.min(match_scores):.3f}")
    print(f"mismatch mean {np.mean(mismatch_scores):.3f} max {np.max(mismatch_scores):.3f}")
    print(f"gating decisions: {len(decisions)}, accuracy {acc:.2%}")
    print(f"total {time.time()-t0:.0f}s")


if __name__ == "__main__":
    main()
