"""The dialogue network: a parameter-sharing masked transformer with a
discrete-latent posterior head, a pointer-generator decode path, a
bag-of-words head, and a topic-match head.

One stack of blocks serves both mask modes. The latent category is a regular
token at slot 0 of generation-mode grids; during training its embedding is
the straight-through mixture of the latent rows so the posterior head
receives gradients from the generation losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import engine as eg
from ..engine import Tensor
from ..textpipe.corpus import Utterance
from ..textpipe.vocab import Vocab
from .config import ModelConfig
from .grid import (
    MASK_FILL,
    MODE_GENERATION,
    MODE_POSTERIOR,
    Batch,
    InputGrid,
    N_ROLES,
    assemble_input,
    collate,
)


@dataclass
class DecodeOutput:
    """Per-step decode state: vocabulary distribution, copy attention over the
    full sequence (zero outside knowledge/context), the generation gate, and
    the hidden state the heads read."""
    p_vocab: np.ndarray
    attn: np.ndarray
    gate: float
    hidden: np.ndarray


@dataclass
class LossParts:
    nll: Tensor
    bow: Tensor
    ts: Tensor
    total: Tensor

    def floats(self) -> dict[str, float]:
        return {"nll": self.nll.item(), "bow": self.bow.item(),
                "ts": self.ts.item(), "total": self.total.item()}


def mix_distribution(p_vocab: np.ndarray, attn: np.ndarray, gate: float,
                     src_ext_ids: np.ndarray, n_ext: int) -> np.ndarray:
    """P(w) = gate * P_vocab(w) + (1 - gate) * sum of attention over source
    positions holding w, on the extended vocabulary."""
    v = p_vocab.shape[0]
    if n_ext < v:
        raise ValueError(f"extended size {n_ext} smaller than vocabulary {v}")
    out = np.zeros(n_ext)
    out[:v] = gate * p_vocab
    np.add.at(out, np.asarray(src_ext_ids, dtype=np.int64), (1.0 - gate) * attn)
    return out


class DialogueModel:
    def __init__(self, config: ModelConfig, vocab: Vocab, seed: int = 0):
        if config.vocab_size and config.vocab_size != len(vocab):
            raise ValueError(
                f"config vocab_size {config.vocab_size} != vocabulary {len(vocab)}")
        config.vocab_size = len(vocab)
        self.config = config
        self.vocab = vocab
        self.seed = seed
        self.params: dict[str, Tensor] = {}
        self._build_params()

    # -- parameters -----------------------------------------------------------

    def _add(self, name: str, shape: tuple[int, ...], scheme: str) -> None:
        if scheme == "ones":
            self.params[name] = Tensor(np.ones(shape), requires_grad=True, name=name)
        else:
            self.params[name] = eg.seeded_init(
                shape, scheme, eg.derive_seed(self.seed, name), name=name)

    def _build_params(self) -> None:
        c = self.config
        d, v = c.hidden, c.vocab_size
        self._add("embed/token", (v, d), "normal-scaled")
        self._add("embed/role", (N_ROLES, d), "normal-scaled")
        self._add("embed/turn", (c.max_turn_distance, d), "normal-scaled")
        self._add("embed/pos", (c.max_positions, d), "normal-scaled")
        for i in range(c.layers):
            p = f"layer{i}"
            for proj in ("wq", "wk", "wv", "wo"):
                self._add(f"{p}/attn/{proj}", (d, d), "uniform-scaled")
                self._add(f"{p}/attn/{proj}b", (d,), "zeros")
            self._add(f"{p}/ln1/gain", (d,), "ones")
            self._add(f"{p}/ln1/bias", (d,), "zeros")
            self._add(f"{p}/ffn/w1", (d, c.ffn_mult * d), "uniform-scaled")
            self._add(f"{p}/ffn/b1", (c.ffn_mult * d,), "zeros")
            self._add(f"{p}/ffn/w2", (c.ffn_mult * d, d), "uniform-scaled")
            self._add(f"{p}/ffn/b2", (d,), "zeros")
            self._add(f"{p}/ln2/gain", (d,), "ones")
            self._add(f"{p}/ln2/bias", (d,), "zeros")
        self._add("final_ln/gain", (d,), "ones")
        self._add("final_ln/bias", (d,), "zeros")
        self._add("head/posterior/w", (d, c.latent), "uniform-scaled")
        self._add("head/posterior/b", (c.latent,), "zeros")
        self._add("head/gate/w", (d, 1), "uniform-scaled")
        self._add("head/gate/b", (1,), "zeros")
        self._add("head/bow/w", (d, v), "uniform-scaled")
        self._add("head/bow/b", (v,), "zeros")
        self._add("head/ts/w", (d, 1), "uniform-scaled")
        self._add("head/ts/b", (1,), "zeros")
        self._add("head/lm/w", (d, v), "uniform-scaled")
        self._add("head/lm/b", (v,), "zeros")
        self._add("pointer/bilinear", (d, d), "uniform-scaled")

    @staticmethod
    def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
        """Expected tensor shapes implied by a config (for checkpoint checks)."""
        probe = DialogueModel.__new__(DialogueModel)
        probe.config = config
        probe.seed = 0
        probe.params = {}
        probe._build_params()
        return {name: t.shape for name, t in probe.params.items()}

    # -- transformer ----------------------------------------------------------

    def _linear(self, x: Tensor, w: str, b: str) -> Tensor:
        return eg.add(eg.matmul(x, self.params[w]), self.params[b])

    def _attention(self, x: Tensor, layer: int, mask3: np.ndarray) -> Tensor:
        c = self.config
        b, s = x.shape[0], x.shape[1]
        p = f"layer{layer}/attn"
        heads = []
        q = self._linear(x, f"{p}/wq", f"{p}/wqb")
        k = self._linear(x, f"{p}/wk", f"{p}/wkb")
        v = self._linear(x, f"{p}/wv", f"{p}/wvb")
        # (B, S, D) -> (B, H, S, hd)
        def split(t):
            t = eg.reshape(t, (b, s, c.heads, c.head_dim))
            return eg.transpose(t, (0, 2, 1, 3))
        q, k, v = split(q), split(k), split(v)
        scores = eg.multiply(eg.matmul(q, eg.transpose(k, (0, 1, 3, 2))),
                             eg.as_tensor(1.0 / math.sqrt(c.head_dim)))
        attn = eg.masked_softmax(scores, mask3)
        ctx = eg.matmul(attn, v)
        ctx = eg.reshape(eg.transpose(ctx, (0, 2, 1, 3)), (b, s, c.hidden))
        return self._linear(ctx, f"{p}/wo", f"{p}/wob")

    def _ffn(self, x: Tensor, layer: int) -> Tensor:
        p = f"layer{layer}/ffn"
        h = eg.gelu(self._linear(x, f"{p}/w1", f"{p}/b1"))
        return self._linear(h, f"{p}/w2", f"{p}/b2")

    def _ln(self, x: Tensor, prefix: str) -> Tensor:
        return eg.layer_norm(x, self.params[f"{prefix}/gain"],
                             self.params[f"{prefix}/bias"])

    def encode(self, batch: Batch, latent_st: Tensor | None = None) -> Tensor:
        """Run the shared stack; returns final hiddens (B, S, D)."""
        c = self.config
        table = self.params["embed/token"]
        if latent_st is None:
            tok = eg.embedding(table, batch.token_ids)
        else:
            # straight-through latent: slot 0 embeds the soft/hard mixture
            z0 = self.vocab.latent_id(0)
            rows = eg.slice_(table, slice(z0, z0 + c.latent))
            z_emb = eg.reshape(eg.matmul(latent_st, rows), (batch.size, 1, c.hidden))
            rest = eg.embedding(table, batch.token_ids[:, 1:])
            tok = eg.concat([z_emb, rest], axis=1)
        h = eg.add(tok, eg.embedding(self.params["embed/role"], batch.role_ids))
        h = eg.add(h, eg.embedding(self.params["embed/turn"], batch.turn_ids))
        h = eg.add(h, eg.embedding(self.params["embed/pos"], batch.pos_ids))
        for i in range(c.layers):
            h = eg.add(h, self._attention(self._ln(h, f"layer{i}/ln1"), i, batch.mask))
            h = eg.add(h, self._ffn(self._ln(h, f"layer{i}/ln2"), i))
        return self._ln(h, "final_ln")

    # -- heads ----------------------------------------------------------------

    def status_hidden(self, batch: Batch, hiddens: Tensor | None = None) -> Tensor:
        """Hidden at the [M] slot of posterior-mode grids: (B, D)."""
        if hiddens is None:
            hiddens = self.encode(batch)
        picked = eg.matmul(eg.as_tensor(batch.sel_m), hiddens)
        return eg.reshape(picked, (batch.size, self.config.hidden))

    def posterior_logits(self, h_m: Tensor) -> Tensor:
        return eg.add(eg.matmul(h_m, self.params["head/posterior/w"]),
                      self.params["head/posterior/b"])

    def ts_logits(self, h_m: Tensor) -> Tensor:
        out = eg.add(eg.matmul(h_m, self.params["head/ts/w"]),
                     self.params["head/ts/b"])
        return eg.reshape(out, (out.shape[0],))

    def bow_logits(self, h_z: Tensor) -> Tensor:
        return eg.add(eg.matmul(h_z, self.params["head/bow/w"]),
                      self.params["head/bow/b"])

    def decode_heads(self, batch: Batch, hiddens: Tensor
                     ) -> tuple[Tensor, Tensor, Tensor, Tensor]:
        """(p_vocab (B,L,V), attn (B,L,S_src), gate (B,L,1), h_r (B,L,D))."""
        c = self.config
        h_r = eg.matmul(eg.as_tensor(batch.sel_r), hiddens)
        gate = eg.sigmoid(self._linear(h_r, "head/gate/w", "head/gate/b"))
        p_vocab = eg.softmax(self._linear(h_r, "head/lm/w", "head/lm/b"), axis=-1)
        h_src = eg.matmul(eg.as_tensor(batch.sel_src), hiddens)
        query = eg.matmul(h_r, self.params["pointer/bilinear"])
        scores = eg.multiply(eg.matmul(query, eg.transpose(h_src, (0, 2, 1))),
                             eg.as_tensor(1.0 / math.sqrt(c.hidden)))
        attn = eg.masked_softmax(scores, batch.src_mask[:, None, :])
        return p_vocab, attn, gate, h_r

    def mixture(self, batch: Batch, p_vocab: Tensor, attn: Tensor,
                gate: Tensor) -> Tensor:
        """Extended-vocabulary distribution per response step: (B, L, E)."""
        b, l = p_vocab.shape[0], p_vocab.shape[1]
        n_oov = batch.n_ext - len(self.vocab)
        vocab_part = eg.multiply(gate, p_vocab)
        if n_oov > 0:
            zeros = eg.as_tensor(np.zeros((b, l, n_oov)))
            vocab_part = eg.concat([vocab_part, zeros], axis=2)
        copy_mass = eg.scatter_copy(attn, batch.ext_ids, batch.n_ext)
        copy_part = eg.multiply(eg.sub(eg.as_tensor(1.0), gate), copy_mass)
        return eg.add(vocab_part, copy_part)

    # -- losses ---------------------------------------------------------------

    def compute_losses(self, examples, rng: np.random.Generator | None,
                       latent_mode: str = "sample",
                       forced_latents: np.ndarray | None = None
                       ) -> tuple[LossParts, dict]:
        """Assemble batches for a list of training examples, pick the latent
        per example, and return the three loss terms plus their sum.

        latent_mode "sample" draws a hard latent from the posterior and routes
        gradients straight-through; "soft" mixes the latent embeddings by the
        posterior probabilities, which keeps the whole loss differentiable
        (used by the finite-difference checks). forced_latents bypasses the
        sampling but keeps the straight-through path.
        """
        if latent_mode not in ("sample", "soft"):
            raise ValueError(f"unknown latent mode {latent_mode!r}")
        if any(not ex.neg_knowledge for ex in examples):
            raise ValueError("every example needs negative knowledge for the "
                             "topic-switch loss")
        b = len(examples)
        pos_grids, neg_grids = [], []
        for ex in examples:
            r_toks = ex.response_tokens()
            pos_grids.append(assemble_input(
                self.vocab, self.config, ex.context, ex.knowledge,
                r_toks, None, MODE_POSTERIOR))
            neg_grids.append(assemble_input(
                self.vocab, self.config, ex.context, ex.neg_knowledge,
                r_toks, None, MODE_POSTERIOR))
        post_batch = collate(pos_grids + neg_grids, self.vocab)
        h_m = self.status_hidden(post_batch)
        ts_all = self.ts_logits(h_m)
        ts_pos = eg.slice_(ts_all, slice(0, b))
        ts_neg = eg.slice_(ts_all, slice(b, 2 * b))
        # Eq-style pairwise cross entropy via stable log-sigmoid
        ts_terms = eg.sub(eg.multiply(eg.log_sigmoid(ts_pos), eg.as_tensor(-1.0)),
                          eg.log_sigmoid(eg.multiply(ts_neg, eg.as_tensor(-1.0))))
        ts = eg.mean(ts_terms)

        post_probs = eg.softmax(
            self.posterior_logits(eg.slice_(h_m, slice(0, b))), axis=-1)
        if latent_mode == "soft":
            z_ids = post_probs.data.argmax(axis=1).astype(np.int64)
            latent_st = post_probs
        else:
            if forced_latents is not None:
                z_ids = np.asarray(forced_latents, dtype=np.int64)
                onehot = np.zeros((b, self.config.latent))
                onehot[np.arange(b), z_ids] = 1.0
            else:
                z_ids, onehot = self._sample_latent(post_probs.data, rng)
            latent_st = eg.straight_through(post_probs, onehot)

        gen_grids = [
            assemble_input(self.vocab, self.config, ex.context, ex.knowledge,
                           ex.response_tokens(), int(z), MODE_GENERATION)
            for ex, z in zip(examples, z_ids)
        ]
        gen_batch = collate(gen_grids, self.vocab)
        hiddens = self.encode(gen_batch, latent_st=latent_st)

        p_vocab, attn, gate, _ = self.decode_heads(gen_batch, hiddens)
        p_ext = self.mixture(gen_batch, p_vocab, attn, gate)
        picked = eg.gather_last(p_ext, gen_batch.target_ext)
        logp = eg.log(picked)
        counts = gen_batch.nll_mask.sum(axis=1)
        per_ex = eg.multiply(eg.sum_(eg.multiply(logp, eg.as_tensor(gen_batch.nll_mask)),
                                     axis=1),
                             eg.as_tensor(-1.0 / counts))
        nll = eg.mean(per_ex)

        h_z = eg.slice_(hiddens, (slice(None), 0))
        bow_lsm = eg.log_softmax(self.bow_logits(h_z), axis=-1)
        bow_picked = eg.gather_cols(bow_lsm, gen_batch.target_vocab)
        # averaged per bag token, like the next-token term: the summed form
        # scales with response length and floors at bag entropy times length
        bow_counts = gen_batch.bow_mask.sum(axis=1)
        bow_per_ex = eg.multiply(
            eg.sum_(eg.multiply(bow_picked, eg.as_tensor(gen_batch.bow_mask)), axis=1),
            eg.as_tensor(-1.0 / bow_counts))
        bow = eg.mean(bow_per_ex)

        total = eg.add(eg.add(nll, bow), ts)
        parts = LossParts(nll=nll, bow=bow, ts=ts, total=total)
        diag = {"latents": z_ids, "ts_pos": ts_pos.data.copy(),
                "ts_neg": ts_neg.data.copy()}
        return parts, diag

    @staticmethod
    def _sample_latent(probs: np.ndarray, rng: np.random.Generator
                       ) -> tuple[np.ndarray, np.ndarray]:
        b, k = probs.shape
        u = rng.random(b)
        cdf = probs.cumsum(axis=1)
        z = (cdf < u[:, None]).sum(axis=1).clip(0, k - 1)
        onehot = np.zeros((b, k))
        onehot[np.arange(b), z] = 1.0
        return z.astype(np.int64), onehot

    # -- single-example inference ---------------------------------------------

    def posterior(self, context: list[Utterance], knowledge: list[str],
                  response_tokens: list[str]) -> tuple[np.ndarray, np.ndarray]:
        """p(latent | context, knowledge, response) and the [M] hidden."""
        grid = assemble_input(self.vocab, self.config, context, knowledge,
                              response_tokens, None, MODE_POSTERIOR)
        batch = collate([grid], self.vocab)
        h_m = self.status_hidden(batch)
        probs = eg.softmax(self.posterior_logits(h_m), axis=-1)
        return probs.data[0].copy(), h_m.data[0].copy()

    def topic_switch_score(self, knowledge: list[str], context: list[Utterance],
                           text_tokens: list[str]) -> float:
        """Probability that the text matches the knowledge (posterior-mode pass)."""
        grid = assemble_input(self.vocab, self.config, context, knowledge,
                              text_tokens, None, MODE_POSTERIOR)
        batch = collate([grid], self.vocab)
        h_m = self.status_hidden(batch)
        return float(eg.sigmoid(self.ts_logits(h_m)).data[0])

    def decode_step(self, grid: InputGrid, t: int) -> DecodeOutput:
        """Decode state for response step t of a generation-mode grid."""
        if grid.mode != MODE_GENERATION:
            raise ValueError("decode_step needs a generation-mode grid")
        r_len = grid.r_span[1] - grid.r_span[0]
        if not 0 <= t < r_len:
            raise ValueError(f"step {t} outside the response region of length {r_len}")
        batch = collate([grid], self.vocab)
        hiddens = self.encode(batch)
        p_vocab, attn, gate, h_r = self.decode_heads(batch, hiddens)
        full_attn = np.zeros(grid.length)
        start, end = grid.src_span
        full_attn[start:end] = attn.data[0, t, :end - start]
        return DecodeOutput(
            p_vocab=p_vocab.data[0, t].copy(),
            attn=full_attn,
            gate=float(gate.data[0, t, 0]),
            hidden=h_r.data[0, t].copy(),
        )
