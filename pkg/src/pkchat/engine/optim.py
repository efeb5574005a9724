"""Adam with bias correction and global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


class OptimizerError(RuntimeError):
    pass


@dataclass
class OptimizerState:
    """Per-parameter moment accumulators plus the shared step counter."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 1.0
    weight_decay: float = 0.0  # decoupled; applied before the moment update
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def clip_by_global_norm(grads: dict[str, np.ndarray],
                        max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Rescale all gradients together so their joint L2 norm is at most max_norm."""
    total = np.sqrt(sum(float((g ** 2).sum()) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads, total
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}, total


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: OptimizerState) -> None:
    """Update params in place from grads; clipping happens before the moments."""
    for name, g in grads.items():
        if name not in params:
            raise OptimizerError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise OptimizerError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} with shape {params[name].shape}")
        if np.isnan(g).any():
            raise OptimizerError(f"NaN gradient for parameter {name!r}; step rejected")

    if state.clip_norm is not None:
        grads, _ = clip_by_global_norm(grads, state.clip_norm)

    state.step_count += 1
    t = state.step_count
    lr, b1, b2 = state.learning_rate, state.beta1, state.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, g in grads.items():
        p = params[name]
        if state.weight_decay:
            p.data -= lr * state.weight_decay * p.data
        m = state.first_moment.setdefault(name, np.zeros_like(p.data))
        v = state.second_moment.setdefault(name, np.zeros_like(p.data))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
