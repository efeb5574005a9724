"""Token vocabulary with reserved special ids and latent-category tokens."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from .tokenizer import tokenize

PAD, UNK, BOS, EOS, STATUS, KSEP = "[PAD]", "[UNK]", "[BOS]", "[EOS]", "[M]", "[KSEP]"
SPECIALS = (PAD, UNK, BOS, EOS, STATUS, KSEP)


class Vocab:
    """Bijective token<->id mapping; specials occupy the lowest ids, then the
    latent-category tokens [Z0..Z(K-1)], then corpus tokens."""

    def __init__(self, corpus_tokens: Iterable[str], n_latent: int):
        if n_latent < 1:
            raise ValueError("need at least one latent category token")
        self.n_latent = int(n_latent)
        self._tokens: list[str] = list(SPECIALS)
        self._tokens.extend(f"[Z{i}]" for i in range(self.n_latent))
        seen = set(self._tokens)
        for tok in corpus_tokens:
            if tok not in seen:
                seen.add(tok)
                self._tokens.append(tok)
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}

    # -- special ids ---------------------------------------------------------
    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    @property
    def status_id(self) -> int:
        return self._ids[STATUS]

    @property
    def ksep_id(self) -> int:
        return self._ids[KSEP]

    def latent_id(self, z: int) -> int:
        if not 0 <= z < self.n_latent:
            raise ValueError(f"latent index {z} outside [0, {self.n_latent})")
        return self._ids[f"[Z{z}]"]

    # -- mapping --------------------------------------------------------------
    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids.get(token, self._ids[UNK])

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens: list[str]) -> list[int]:
        unk = self._ids[UNK]
        return [self._ids.get(t, unk) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._tokens[i] for i in ids]

    def tokens(self) -> list[str]:
        return list(self._tokens)

    @classmethod
    def from_tokens(cls, tokens: list[str], n_latent: int) -> "Vocab":
        v = cls.__new__(cls)
        v.n_latent = int(n_latent)
        v._tokens = list(tokens)
        v._ids = {tok: i for i, tok in enumerate(tokens)}
        for s in SPECIALS:
            if s not in v._ids:
                raise ValueError(f"vocabulary is missing special token {s}")
        return v


def build_vocab(scenarios, min_count: int = 1, n_latent: int = 5,
                exclude: set[str] | None = None) -> Vocab:
    """Count tokens over knowledge lines, goals, and turns; register the ones
    seen at least min_count times. Rare tokens map to [UNK] and stay reachable
    only through the copy path."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    n_scen = 0
    for scen in scenarios:
        n_scen += 1
        for line in scen.knowledge:
            counts.update(tokenize(line))
        if scen.goal:
            counts.update(tokenize(scen.goal))
        for turn in scen.turns:
            counts.update(tokenize(turn.text))
    if n_scen == 0 or not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    exclude = exclude or set()
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count and tok not in exclude),
        key=lambda tok: (-counts[tok], tok))
    return Vocab(kept, n_latent=n_latent)
