"""Model input assembly: token/role/turn/position ids, the attention
visibility mask for the two mask modes, and the per-example extended
vocabulary for the copy mechanism.

Layout is [z-token][knowledge][context][response], with one [M] status token
appended in posterior mode. In generation mode the z/knowledge/context block
is mutually visible and each response slot additionally sees itself and
earlier response slots; in posterior mode everything sees everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..textpipe.corpus import Utterance
from ..textpipe.tokenizer import tokenize
from ..textpipe.vocab import KSEP, Vocab
from .config import ModelConfig

ROLE_USER, ROLE_BOT, ROLE_KNOWLEDGE, ROLE_LATENT = 0, 1, 2, 3
N_ROLES = 4

MODE_GENERATION = "generation"
MODE_POSTERIOR = "posterior"

MASK_FILL = -1e9  # large-negative sentinel, not -inf, so softmax stays finite


@dataclass
class InputGrid:
    token_ids: np.ndarray
    role_ids: np.ndarray
    turn_ids: np.ndarray
    pos_ids: np.ndarray
    mask: np.ndarray  # (S, S) bool; mask[i, j] == position i may attend to j
    mode: str
    z_slot: int | None
    k_span: tuple[int, int]
    c_span: tuple[int, int]
    r_span: tuple[int, int]
    m_slot: int | None
    src_tokens: list[str] = field(default_factory=list)
    ext_ids: np.ndarray | None = None       # (S_src,) ids into V + oov list
    oov_tokens: list[str] = field(default_factory=list)
    target_vocab_ids: np.ndarray | None = None  # (T+1,) response + [EOS], V-space
    target_ext_ids: np.ndarray | None = None    # (T+1,) response + [EOS], ext-space
    response_tokens: list[str] = field(default_factory=list)

    @property
    def length(self) -> int:
        return int(self.token_ids.shape[0])

    @property
    def src_span(self) -> tuple[int, int]:
        return (self.k_span[0], self.c_span[1])


def _truncate_context(turn_tokens: list[list[str]], budget: int) -> list[list[str]]:
    # drop oldest turns first; a lone oversized turn keeps its most recent tokens
    kept = list(turn_tokens)
    while kept and sum(len(t) for t in kept) > budget and len(kept) > 1:
        kept.pop(0)
    if kept and len(kept[0]) > budget:
        kept[0] = kept[0][-budget:]
    return kept


def _truncate_knowledge(entries: list[list[str]], budget: int) -> list[list[str]]:
    # trim tokens off the longest entries; drop trailing entries as a last resort
    entries = [list(e) for e in entries if e]

    def total(es):
        return sum(len(e) for e in es) + max(len(es) - 1, 0)

    while entries and total(entries) > budget:
        longest = max(range(len(entries)), key=lambda i: len(entries[i]))
        if len(entries[longest]) > 1:
            entries[longest].pop()
        else:
            entries.pop()
    return entries


def assemble_input(vocab: Vocab, config: ModelConfig,
                   context_turns: list[Utterance], knowledge: list[str],
                   response_tokens: list[str] | None, latent: int | None,
                   mode: str) -> InputGrid:
    if mode not in (MODE_GENERATION, MODE_POSTERIOR):
        raise ValueError(f"unknown mode {mode!r}")

    k_entries = _truncate_knowledge([tokenize(k) for k in knowledge],
                                    config.max_knowledge)
    c_tokens = _truncate_context([tokenize(t.text) for t in context_turns],
                                 config.max_context)
    c_roles = [ROLE_USER if t.role == "user" else ROLE_BOT
               for t in context_turns][len(context_turns) - len(c_tokens):]
    if not k_entries and not c_tokens:
        raise ValueError("cannot assemble input from empty context and knowledge")

    r_tokens = list(response_tokens or [])[:config.max_response]

    tokens: list[str] = []
    roles: list[int] = []
    turns: list[int] = []

    if mode == MODE_GENERATION:
        if latent is None:
            raise ValueError("generation mode requires a latent index")
        z_slot = 0
        tokens.append(f"[Z{latent}]")
        roles.append(ROLE_LATENT)
        turns.append(0)
    else:
        if latent is not None:
            raise ValueError("posterior mode estimates the latent; do not pass one")
        z_slot = None

    k_start = len(tokens)
    for i, entry in enumerate(k_entries):
        if i > 0:
            tokens.append(KSEP)
            roles.append(ROLE_KNOWLEDGE)
            turns.append(0)
        tokens.extend(entry)
        roles.extend([ROLE_KNOWLEDGE] * len(entry))
        turns.extend([0] * len(entry))
    k_end = len(tokens)

    c_start = len(tokens)
    n_turns = len(c_tokens)
    for j, (turn_toks, role) in enumerate(zip(c_tokens, c_roles)):
        distance = min(n_turns - j, config.max_turn_distance - 1)
        tokens.extend(turn_toks)
        roles.extend([role] * len(turn_toks))
        turns.extend([distance] * len(turn_toks))
    c_end = len(tokens)

    r_start = len(tokens)
    if mode == MODE_GENERATION:
        tokens.append("[BOS]")
        roles.append(ROLE_BOT)
        turns.append(0)
    tokens.extend(r_tokens)
    roles.extend([ROLE_BOT] * len(r_tokens))
    turns.extend([0] * len(r_tokens))
    r_end = len(tokens)

    if mode == MODE_POSTERIOR:
        m_slot = len(tokens)
        tokens.append("[M]")
        roles.append(ROLE_LATENT)
        turns.append(0)
    else:
        m_slot = None

    size = len(tokens)
    token_ids = np.array(vocab.encode(tokens), dtype=np.int64)
    role_ids = np.array(roles, dtype=np.int64)
    turn_ids = np.array(turns, dtype=np.int64)
    pos_ids = np.arange(size, dtype=np.int64)

    if mode == MODE_POSTERIOR:
        mask = np.ones((size, size), dtype=bool)
    else:
        mask = np.zeros((size, size), dtype=bool)
        mask[:r_start, :r_start] = True  # z/k/c block is mutually visible
        for p in range(r_start, r_end):
            mask[p, :r_start] = True
            mask[p, r_start:p + 1] = True  # causal within the response

    grid = InputGrid(
        token_ids=token_ids, role_ids=role_ids, turn_ids=turn_ids,
        pos_ids=pos_ids, mask=mask, mode=mode, z_slot=z_slot,
        k_span=(k_start, k_end), c_span=(c_start, c_end),
        r_span=(r_start, r_end), m_slot=m_slot,
        response_tokens=r_tokens,
    )

    # extended ids over the copy source (knowledge + context positions)
    src_tokens = tokens[k_start:c_end]
    oov: list[str] = []
    oov_pos: dict[str, int] = {}
    ext = np.empty(len(src_tokens), dtype=np.int64)
    for i, tok in enumerate(src_tokens):
        if tok in vocab:
            ext[i] = vocab.id_of(tok)
        else:
            if tok not in oov_pos:
                oov_pos[tok] = len(oov)
                oov.append(tok)
            ext[i] = len(vocab) + oov_pos[tok]
    grid.src_tokens = src_tokens
    grid.ext_ids = ext
    grid.oov_tokens = oov

    if mode == MODE_GENERATION and response_tokens is not None:
        targets = r_tokens + ["[EOS]"]
        grid.target_vocab_ids = np.array(vocab.encode(targets), dtype=np.int64)
        ext_targets = []
        for tok in targets:
            if tok in vocab:
                ext_targets.append(vocab.id_of(tok))
            elif tok in oov_pos:
                ext_targets.append(len(vocab) + oov_pos[tok])
            else:
                ext_targets.append(vocab.unk_id)
        grid.target_ext_ids = np.array(ext_targets, dtype=np.int64)
    return grid


@dataclass
class Batch:
    grids: list[InputGrid]
    token_ids: np.ndarray     # (B, S)
    role_ids: np.ndarray
    turn_ids: np.ndarray
    pos_ids: np.ndarray
    mask: np.ndarray          # (B, S, S)
    sel_m: np.ndarray | None  # (B, 1, S) one-hot selectors
    sel_r: np.ndarray | None  # (B, L, S)
    sel_src: np.ndarray | None  # (B, S_src, S)
    src_mask: np.ndarray | None  # (B, S_src) bool
    ext_ids: np.ndarray | None   # (B, S_src)
    n_ext: int = 0
    target_ext: np.ndarray | None = None    # (B, L)
    target_vocab: np.ndarray | None = None  # (B, L)
    nll_mask: np.ndarray | None = None      # (B, L) floats
    bow_mask: np.ndarray | None = None      # (B, L)

    @property
    def size(self) -> int:
        return len(self.grids)


def collate(grids: list[InputGrid], vocab: Vocab) -> Batch:
    if not grids:
        raise ValueError("empty batch")
    mode = grids[0].mode
    if any(g.mode != mode for g in grids):
        raise ValueError("cannot mix grid modes in one batch")
    b = len(grids)
    s_max = max(g.length for g in grids)
    pad = vocab.pad_id

    token_ids = np.full((b, s_max), pad, dtype=np.int64)
    role_ids = np.zeros((b, s_max), dtype=np.int64)
    turn_ids = np.zeros((b, s_max), dtype=np.int64)
    pos_ids = np.zeros((b, s_max), dtype=np.int64)
    mask = np.zeros((b, s_max, s_max), dtype=bool)
    for i, g in enumerate(grids):
        n = g.length
        token_ids[i, :n] = g.token_ids
        role_ids[i, :n] = g.role_ids
        turn_ids[i, :n] = g.turn_ids
        pos_ids[i, :n] = g.pos_ids
        mask[i, :n, :n] = g.mask
        mask[i, n:, n:] = np.eye(s_max - n, dtype=bool)  # pad rows see themselves

    sel_m = None
    if mode == MODE_POSTERIOR:
        sel_m = np.zeros((b, 1, s_max))
        for i, g in enumerate(grids):
            sel_m[i, 0, g.m_slot] = 1.0

    sel_r = sel_src = src_mask = ext_ids = None
    target_ext = target_vocab = nll_mask = bow_mask = None
    n_ext = len(vocab)
    if mode == MODE_GENERATION:
        src_max = max(len(g.src_tokens) for g in grids)
        sel_src = np.zeros((b, src_max, s_max))
        src_mask = np.zeros((b, src_max), dtype=bool)
        ext_ids = np.zeros((b, src_max), dtype=np.int64)
        for i, g in enumerate(grids):
            start, end = g.src_span
            n = end - start
            sel_src[i, np.arange(n), np.arange(start, end)] = 1.0
            src_mask[i, :n] = True
            # separators are structure, not content: keep them out of the
            # copy distribution
            src_mask[i, :n] &= g.token_ids[start:end] != vocab.ksep_id
            ext_ids[i, :n] = g.ext_ids
        n_ext = len(vocab) + max(len(g.oov_tokens) for g in grids)

        l_max = max(g.r_span[1] - g.r_span[0] for g in grids)
        sel_r = np.zeros((b, l_max, s_max))
        for i, g in enumerate(grids):
            start, end = g.r_span
            n = end - start
            sel_r[i, np.arange(n), np.arange(start, end)] = 1.0

        if all(g.target_ext_ids is not None for g in grids):
            target_ext = np.zeros((b, l_max), dtype=np.int64)
            target_vocab = np.zeros((b, l_max), dtype=np.int64)
            nll_mask = np.zeros((b, l_max))
            bow_mask = np.zeros((b, l_max))
            for i, g in enumerate(grids):
                n = len(g.target_ext_ids)
                target_ext[i, :n] = g.target_ext_ids
                target_vocab[i, :n] = g.target_vocab_ids
                nll_mask[i, :n] = 1.0
                bow_mask[i, :n - 1] = 1.0  # the bag excludes the [EOS] slot

    return Batch(
        grids=grids, token_ids=token_ids, role_ids=role_ids, turn_ids=turn_ids,
        pos_ids=pos_ids, mask=mask, sel_m=sel_m, sel_r=sel_r, sel_src=sel_src,
        src_mask=src_mask, ext_ids=ext_ids, n_ext=n_ext, target_ext=target_ext,
        target_vocab=target_vocab, nll_mask=nll_mask, bow_mask=bow_mask,
    )
