"""Dialogue network hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class ModelConfig:
    layers: int = 2
    heads: int = 4
    hidden: int = 64
    latent: int = 5          # number of discrete latent categories
    vocab_size: int = 0      # filled in once the vocabulary is built
    max_knowledge: int = 72  # token budget for the knowledge segment (incl. [KSEP])
    max_context: int = 48
    max_response: int = 16
    max_turn_distance: int = 16
    ffn_mult: int = 4

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ValueError(
                f"hidden width {self.hidden} must divide evenly over "
                f"{self.heads} heads")
        if self.latent < 2:
            raise ValueError("need at least two latent categories")
        for name in ("layers", "heads", "hidden", "max_knowledge",
                     "max_context", "max_response", "max_turn_distance"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    @property
    def max_positions(self) -> int:
        # z slot + knowledge + context + ([BOS] + response) + [M]
        return 1 + self.max_knowledge + self.max_context + self.max_response + 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)
