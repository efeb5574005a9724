"""Scratch validation of the overfit + copy-efficacy experiment (not shipped)."""
import time

import numpy as np

from pkchat.metrics import EvalPair, build_eval_pairs, eval_pairs
from pkchat.model import (DecodeConfig, ModelConfig, MODE_GENERATION,
                          assemble_input, collate, generate)
from pkchat.textpipe import gen_synthetic_corpus, make_demo_kg, tokenize
from pkchat.trainer import TrainConfig, build_examples, to_model, train

t0 = time.time()
kg = make_demo_kg(seed=11, n_entities=48, rare_fraction=1.0)
all_scens = gen_synthetic_corpus(kg, seed=12, n_scenarios=35,
                                 switch_fraction=0.25,
                                 min_rounds=3, max_rounds=5)
train_scens, held = all_scens[:32], all_scens[32:]

# anonymous anchors: every scenario must be solved by reading its knowledge
exclude = set()
for s_ in all_scens:
    for line in s_.knowledge:
        if " catalogued_as " in line:
            exclude.update(tokenize(line.split(" catalogued_as ")[0]))

model_cfg = ModelConfig(layers=2, heads=4, hidden=64, latent=5, ffn_mult=2,
                        max_knowledge=72, max_context=40, max_response=14)
train_cfg = TrainConfig(steps=2000, batch_size=8, seed=0, min_count=3,
                        eval_every=500, weight_decay=0.1)
ckpt, trace = train(train_scens, model_cfg, train_cfg, vocab_exclude=exclude)
model = to_model(ckpt)
print(f"train time {time.time()-t0:.0f}s")
print("initial:", trace[0])
print("final:", trace[-1])
print("ratio:", trace[-1]["total"] / trace[0]["total"])

examples = build_examples(train_scens, seed=99)
correct = total = 0
for i in range(0, len(examples), 8):
    batch_ex = examples[i:i + 8]
    grids = []
    for ex in batch_ex:
        probs, _ = model.posterior(ex.context, ex.knowledge, ex.response_tokens())
        z = int(np.argmax(probs))
        grids.append(assemble_input(model.vocab, model.config, ex.context,
                                    ex.knowledge, ex.response_tokens(), z,
                                    MODE_GENERATION))
    batch = collate(grids, model.vocab)
    hiddens = model.encode(batch)
    p_vocab, attn, gate, _ = model.decode_heads(batch, hiddens)
    p_ext = model.mixture(batch, p_vocab, attn, gate)
    pred = p_ext.data.argmax(axis=2)
    mask = batch.nll_mask.astype(bool)
    correct += (pred == batch.target_ext)[mask].sum()
    total += mask.sum()
print("teacher-forced acc:", correct / total)

pairs = build_eval_pairs(model, train_scens)
report = eval_pairs(pairs)
gold_pairs = [EvalPair(generated=tokenize(s.turns[i].text),
                       reference=tokenize(s.turns[i].text),
                       knowledge=list(s.knowledge))
              for s in train_scens for i in s.bot_turn_indices()]
gold = eval_pairs(gold_pairs)
print("model KF1:", report.knowledge_f1, "gold KF1:", gold.knowledge_f1,
      "diff:", abs(report.knowledge_f1 - gold.knowledge_f1))
print("bleu1:", report.bleu1, "bleu2:", report.bleu2)

vocab = model.vocab
oov_tail_tokens = set()
tails_by_scen = {}
for scen in held:
    tails = []
    for line in scen.knowledge:
        rel = next(tok for tok in line.split() if "_" in tok)
        tails.append((rel, line.split(f" {rel} ", 1)[1]))
    tails_by_scen[scen.id] = tails
    for _, tail in tails:
        for tok in tokenize(tail):
            if tok not in vocab:
                oov_tail_tokens.add(tok)
print("held-out scenarios:", [s.id for s in held])
print("n OOV tail tokens:", len(oov_tail_tokens))
for scen in held:  # every held-out tail entity must be out of vocabulary
    for rel, tail in tails_by_scen[scen.id]:
        assert any(tok not in vocab for tok in tokenize(tail)), (rel, tail)


def tail_for_turn(scen, i):
    q = scen.turns[i - 1].text
    rel = next(tok for tok in tokenize(q) if "_" in tok)
    opts = [t for r, t in tails_by_scen[scen.id] if r == rel]
    golden = scen.turns[i].text
    for t in opts:
        if t in golden:
            return t
    return opts[0]


hits = misses = 0
ablation_leaks = 0
details = []
for scen in held:
    for i in scen.bot_turn_indices():
        ctx = list(scen.turns[:i])
        res = generate(model, ctx, scen.knowledge,
                       DecodeConfig(beam_width=3, max_length=14))
        greedy = generate(model, ctx, scen.knowledge, DecodeConfig(max_length=14))
        tail = tail_for_turn(scen, i)
        tail_toks = tokenize(tail)
        gen_toks = res.tokens
        ok = all(tok in gen_toks for tok in tail_toks)
        copy_ok = True
        for tok in tail_toks:
            if tok in oov_tail_tokens:
                idxs = [j for j, g in enumerate(gen_toks) if g == tok]
                if not idxs or not all(res.attributions[j].source == "copy" for j in idxs):
                    copy_ok = False
        success = ok and copy_ok
        hits += success
        misses += (not success)
        g_ok = all(tok in greedy.tokens for tok in tail_toks)
        details.append((scen.id, i, tail, " ".join(gen_toks), success,
                        "greedy-ok" if g_ok else "greedy-miss"))
        abl = generate(model, ctx, scen.knowledge, DecodeConfig(max_length=14),
                       gate_override=1.0)
        if any(tok in abl.tokens for tok in oov_tail_tokens):
            ablation_leaks += 1
for d in details:
    print(d)
print(f"copy efficacy: {hits}/{hits+misses} = {hits/(hits+misses):.2%}")
print(f"ablation leaks: {ablation_leaks}")
print(f"total time {time.time()-t0:.0f}s")
