"""The dialogue network, its input assembly, and generation."""

from .config import ModelConfig
from .generate import DecodeConfig, GenerationResult, TokenAttribution, generate
from .grid import (
    MASK_FILL,
    MODE_GENERATION,
    MODE_POSTERIOR,
    ROLE_BOT,
    ROLE_KNOWLEDGE,
    ROLE_LATENT,
    ROLE_USER,
    Batch,
    InputGrid,
    assemble_input,
    collate,
)
from .network import DecodeOutput, DialogueModel, LossParts, mix_distribution

__all__ = [
    "ModelConfig", "DecodeConfig", "GenerationResult", "TokenAttribution",
    "generate", "MASK_FILL", "MODE_GENERATION", "MODE_POSTERIOR",
    "ROLE_BOT", "ROLE_KNOWLEDGE", "ROLE_LATENT", "ROLE_USER",
    "Batch", "InputGrid", "assemble_input", "collate",
    "DecodeOutput", "DialogueModel", "LossParts", "mix_distribution",
]
