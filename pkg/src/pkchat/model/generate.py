"""Inference-time generation: decode one candidate per latent category,
rank candidates with the topic-match head, and attribute each emitted token
to the vocabulary or the copy path."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..textpipe.corpus import Utterance
from .grid import MODE_GENERATION, assemble_input, collate
from .network import DialogueModel


@dataclass
class TokenAttribution:
    text: str
    source: str               # "vocab" | "copy"
    copy_index: int | None    # index into the knowledge+context source tokens
    gate: float


@dataclass
class GenerationResult:
    tokens: list[str]
    attributions: list[TokenAttribution]
    latent: int
    coherence: float
    gates: list[float] = field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class DecodeConfig:
    beam_width: int = 1  # 1 is greedy
    max_length: int = 16


@dataclass
class _Beam:
    tokens: list[str]
    log_prob: float
    done: bool
    attributions: list[TokenAttribution]


def _step_distribution(model: DialogueModel, context, knowledge,
                       tokens: list[str], latent: int,
                       gate_override: float | None):
    grid = assemble_input(model.vocab, model.config, context, knowledge,
                          tokens, latent, MODE_GENERATION)
    batch = collate([grid], model.vocab)
    hiddens = model.encode(batch)
    p_vocab, attn, gate, _ = model.decode_heads(batch, hiddens)
    t = grid.r_span[1] - grid.r_span[0] - 1  # predict from the last filled slot
    pv = p_vocab.data[0, t]
    a = attn.data[0, t]
    g = float(gate.data[0, t, 0]) if gate_override is None else float(gate_override)
    n_ext = len(model.vocab) + len(grid.oov_tokens)
    p_ext = np.zeros(n_ext)
    p_ext[:len(model.vocab)] = g * pv
    np.add.at(p_ext, grid.ext_ids, (1.0 - g) * a)
    return p_ext, pv, a, g, grid


def _attribution_for(model: DialogueModel, ext_id: int, p_ext, pv, a, g, grid
                     ) -> TokenAttribution:
    v = len(model.vocab)
    text = (model.vocab.token_of(ext_id) if ext_id < v
            else grid.oov_tokens[ext_id - v])
    vocab_term = g * pv[ext_id] if ext_id < v else 0.0
    copy_positions = np.nonzero(grid.ext_ids == ext_id)[0]
    copy_term = float((1.0 - g) * a[copy_positions].sum()) if len(copy_positions) else 0.0
    if copy_term > vocab_term and len(copy_positions):
        best = int(copy_positions[np.argmax(a[copy_positions])])
        return TokenAttribution(text=text, source="copy", copy_index=best, gate=g)
    return TokenAttribution(text=text, source="vocab", copy_index=None, gate=g)


def _decode_candidate(model: DialogueModel, context, knowledge, latent: int,
                      decode: DecodeConfig, gate_override: float | None) -> _Beam:
    max_len = min(decode.max_length, model.config.max_response)
    width = max(1, decode.beam_width)
    eos = model.vocab.eos_id
    beams = [_Beam(tokens=[], log_prob=0.0, done=False, attributions=[])]
    for _ in range(max_len):
        if all(b.done for b in beams):
            break
        expanded: list[_Beam] = []
        for beam in beams:
            if beam.done:
                expanded.append(beam)
                continue
            p_ext, pv, a, g, grid = _step_distribution(
                model, context, knowledge, beam.tokens, latent, gate_override)
            order = np.argsort(-p_ext)[:width]
            for ext_id in order:
                ext_id = int(ext_id)
                logp = beam.log_prob + float(np.log(max(p_ext[ext_id], 1e-300)))
                if ext_id == eos:
                    expanded.append(_Beam(beam.tokens, logp, True,
                                          list(beam.attributions)))
                    continue
                attr = _attribution_for(model, ext_id, p_ext, pv, a, g, grid)
                expanded.append(_Beam(beam.tokens + [attr.text], logp, False,
                                      beam.attributions + [attr]))
        expanded.sort(key=lambda b: -b.log_prob)
        beams = expanded[:width]
    beams.sort(key=lambda b: -b.log_prob)
    return beams[0]


def generate(model: DialogueModel, context: list[Utterance],
             knowledge: list[str], decode: DecodeConfig | None = None,
             forced_latent: int | None = None,
             gate_override: float | None = None) -> GenerationResult:
    """Decode one candidate per latent category (or just the forced one) and
    return the candidate the topic-match head scores highest against the
    active knowledge and context."""
    decode = decode or DecodeConfig()
    latents = ([forced_latent] if forced_latent is not None
               else list(range(model.config.latent)))
    best: GenerationResult | None = None
    for latent in latents:
        beam = _decode_candidate(model, context, knowledge, latent, decode,
                                 gate_override)
        score = model.topic_switch_score(knowledge, context, beam.tokens)
        if best is None or score > best.coherence:
            best = GenerationResult(
                tokens=beam.tokens,
                attributions=beam.attributions,
                latent=latent,
                coherence=score,
                gates=[attr.gate for attr in beam.attributions],
            )
    assert best is not None
    return best
