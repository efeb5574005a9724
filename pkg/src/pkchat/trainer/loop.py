"""Multi-task training loop: batching, loss aggregation, Adam, trace logging."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..engine import OptimizerState, Tape, adam_step
from ..keywords.crf import CrfModel, crf_train
from ..keywords.extract import CorpusStats
from ..kg import EntityIndex, TripleStore
from ..model.config import ModelConfig
from ..model.network import DialogueModel
from ..textpipe.annotate import auto_annotate
from ..textpipe.corpus import Scenario
from ..textpipe.tokenizer import tokenize
from ..textpipe.vocab import build_vocab
from . import checkpoint as ckpt_io
from .examples import build_examples

log = logging.getLogger(__name__)


class TrainDivergedError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"training diverged (non-finite loss) at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 8
    learning_rate: float = 1e-3
    seed: int = 0
    eval_every: int = 200
    clip_norm: float = 1.0
    weight_decay: float = 0.0
    min_count: int = 1
    crf_epochs: int = 25
    crf_lr: float = 0.1

    def __post_init__(self):
        for name in ("batch_size", "learning_rate", "eval_every", "clip_norm",
                     "min_count", "crf_epochs", "crf_lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


def _train_crf(scenarios: list[Scenario], kg: TripleStore,
               config: TrainConfig) -> CrfModel:
    index = EntityIndex(kg)
    annotated = []
    for scen in scenarios:
        annotated.extend(auto_annotate(scen, index))
    return crf_train(annotated, epochs=config.crf_epochs, lr=config.crf_lr)


def _corpus_stats(scenarios: list[Scenario]) -> CorpusStats:
    # each turn is one document for the inverse-document-frequency table
    docs = (tokenize(turn.text) for scen in scenarios for turn in scen.turns)
    return CorpusStats.from_documents(docs)


def train(scenarios: list[Scenario], model_config: ModelConfig,
          train_config: TrainConfig, kg: TripleStore | None = None,
          vocab_exclude: set[str] | None = None
          ) -> tuple[ckpt_io.Checkpoint, list[dict]]:
    """Train the dialogue model (and, when a graph is given, the tagger and
    the extraction statistics) and return the checkpoint plus the loss trace.

    Deterministic: the seed fixes initialization, batch order, latent
    sampling, and negative sampling.
    """
    seeds = np.random.SeedSequence(train_config.seed).generate_state(3)
    vocab = build_vocab(scenarios, min_count=train_config.min_count,
                        n_latent=model_config.latent, exclude=vocab_exclude)
    model = DialogueModel(model_config, vocab, seed=train_config.seed)
    examples = build_examples(scenarios, seed=int(seeds[0]))
    order_rng = np.random.default_rng(int(seeds[1]))
    latent_rng = np.random.default_rng(int(seeds[2]))

    state = OptimizerState(learning_rate=train_config.learning_rate,
                           clip_norm=train_config.clip_norm,
                           weight_decay=train_config.weight_decay)
    trace: list[dict] = []
    order: list[int] = []
    cursor = 0
    for step in range(1, train_config.steps + 1):
        batch = []
        for _ in range(min(train_config.batch_size, len(examples))):
            if cursor >= len(order):
                order = list(order_rng.permutation(len(examples)))
                cursor = 0
            batch.append(examples[order[cursor]])
            cursor += 1
        with Tape() as tape:
            parts, _ = model.compute_losses(batch, latent_rng)
        record = {"step": step, **parts.floats()}
        if not math.isfinite(record["total"]):
            raise TrainDivergedError(step)
        grads = tape.backward(parts.total)
        adam_step(model.params, {n: grads[p] for n, p in model.params.items()},
                  state)
        trace.append(record)
        if step % train_config.eval_every == 0 or step == train_config.steps:
            log.info("step %d: nll=%.4f bow=%.4f ts=%.4f total=%.4f",
                     step, record["nll"], record["bow"], record["ts"],
                     record["total"])

    crf = _train_crf(scenarios, kg, train_config) if kg is not None else None
    stats = _corpus_stats(scenarios)
    ckpt = ckpt_io.from_model(
        model, step=train_config.steps, train_config=asdict(train_config),
        crf=crf, corpus_stats=stats)
    return ckpt, trace


def write_trace(trace: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "nll", "bow", "ts", "total"])
        for rec in trace:
            writer.writerow([rec["step"], repr(rec["nll"]), repr(rec["bow"]),
                             repr(rec["ts"]), repr(rec["total"])])
