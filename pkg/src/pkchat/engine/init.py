"""Seeded parameter initialization; identical seeds give bit-identical tensors."""

from __future__ import annotations

import zlib

import numpy as np

from .tensor import Tensor

SCHEMES = ("uniform-scaled", "normal-scaled", "zeros")


def _fans(shape: tuple[int, ...]) -> tuple[int, int]:
    if len(shape) >= 2:
        return shape[-2], shape[-1]
    return shape[0], shape[0]


def seeded_init(shape, scheme: str, seed: int, name: str | None = None) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "zeros":
        data = np.zeros(shape)
    else:
        rng = np.random.default_rng(seed)
        fan_in, fan_out = _fans(shape)
        if scheme == "uniform-scaled":
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            data = rng.uniform(-bound, bound, size=shape)
        else:
            std = np.sqrt(2.0 / (fan_in + fan_out))
            data = rng.normal(0.0, std, size=shape)
    return Tensor(data, requires_grad=True, name=name)


def derive_seed(master_seed: int, name: str) -> int:
    """Stable per-parameter seed: crc32 of the name mixed into the master seed."""
    return (int(master_seed) * 0x9E3779B1 + zlib.crc32(name.encode("utf-8"))) % (2 ** 32)
