"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation the dialogue network needs is a plain function over
:class:`Tensor` values. When a :class:`Tape` is active and any input
requires gradients, the op records a backward rule on the tape; calling
``tape.backward(loss)`` replays the records once, in reverse execution
order, and accumulates gradients.

Ops are also registered by name so callers can dispatch dynamically via
:func:`forward`; unknown kinds are rejected.
"""

from __future__ import annotations

import os
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import kernels

__all__ = [
    "Tensor", "Tape", "ShapeError", "as_tensor", "forward", "backward",
    "OPS",
]

_CHECK_FINITE = os.environ.get("PKCHAT_CHECK_FINITE", "") == "1"


class ShapeError(ValueError):
    """Raised when op inputs do not conform to the op's shape rule."""


class Tensor:
    """A dense n-dimensional float64 value, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # Operator sugar; the heavy lifting lives in the module-level ops.
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return multiply(self, as_tensor(other))

    def __rmul__(self, other):
        return multiply(as_tensor(other), self)

    def __neg__(self):
        return multiply(self, as_tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64))


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------

_ACTIVE_TAPES: list["Tape"] = []


class Tape:
    """Ordered record of executed ops; execution order is topological order."""

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPES.pop()
        return False

    def __len__(self) -> int:
        return len(self._records)

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], backward_fn: Callable):
        self._records.append((out, inputs, backward_fn))

    def backward(self, loss: Tensor) -> "Gradients":
        """Accumulate d(loss)/d(tensor) for every tensor reachable on the tape.

        Each record is visited exactly once, in reverse execution order.
        """
        if loss.size != 1:
            raise ValueError(
                f"loss must be a scalar; got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for out, inputs, backward_fn in reversed(self._records):
            g_out = grads.get(id(out))
            if g_out is None:
                continue
            for inp, g in zip(inputs, backward_fn(g_out)):
                if g is None or not inp.requires_grad:
                    continue
                acc = grads.get(id(inp))
                # never mutate a stored array: rules may hand back views of g_out
                grads[id(inp)] = g if acc is None else acc + g
        return Gradients(grads)


class Gradients:
    """Gradient lookup keyed by tensor identity; off-path tensors get zeros."""

    def __init__(self, table: dict[int, np.ndarray]):
        self._table = table

    def __getitem__(self, t: Tensor) -> np.ndarray:
        g = self._table.get(id(t))
        if g is None:
            return np.zeros_like(t.data)
        return g

    def __contains__(self, t: Tensor) -> bool:
        return id(t) in self._table


def _active_tape() -> Tape | None:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def backward(tape: Tape, loss: Tensor) -> Gradients:
    return tape.backward(loss)


# ---------------------------------------------------------------------------
# Op registration
# ---------------------------------------------------------------------------

OPS: dict[str, Callable] = {}


def _op(name: str):
    def register(fn):
        OPS[name] = fn
        return fn
    return register


def forward(kind: str, *inputs, **attrs) -> Tensor:
    """Dispatch an op by name; rejects unknown kinds."""
    fn = OPS.get(kind)
    if fn is None:
        raise ValueError(f"unknown op kind: {kind!r}")
    return fn(*inputs, **attrs)


def _make(data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: Callable) -> Tensor:
    if _CHECK_FINITE and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value produced by a forward op")
    out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs))
    tape = _active_tape()
    if tape is not None and out.requires_grad:
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, (gs, ss) in enumerate(zip(g.shape, shape)):
        if ss == 1 and gs != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

@_op("add")
def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not broadcast")
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.shape),
                                          _unbroadcast(g, b.shape)))


@_op("sub")
def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: shapes {a.shape} and {b.shape} do not broadcast")
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.shape),
                                          _unbroadcast(-g, b.shape)))


@_op("multiply")
def multiply(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"multiply: shapes {a.shape} and {b.shape} do not broadcast")
    return _make(data, (a, b), lambda g: (_unbroadcast(g * b.data, a.shape),
                                          _unbroadcast(g * a.data, b.shape)))


@_op("matmul")
def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: inputs must be >=2-d; got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ for {a.shape} @ {b.shape}")
    data = np.matmul(a.data, b.data)

    def backward_fn(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _make(data, (a, b), backward_fn)


@_op("log")
def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


# ---------------------------------------------------------------------------
# Shape manipulation
# ---------------------------------------------------------------------------

@_op("reshape")
def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


@_op("transpose")
def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


@_op("concat")
def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    base = list(ts[0].shape)
    for t in ts[1:]:
        other = list(t.shape)
        if len(other) != len(base) or any(
                i != axis % len(base) and other[i] != base[i] for i in range(len(base))):
            raise ShapeError(
                f"concat: incompatible shapes {[t.shape for t in ts]} on axis {axis}")
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(data, tuple(ts), backward_fn)


@_op("slice")
def slice_(a: Tensor, key) -> Tensor:
    """Basic (non-fancy) indexing; ints and slices only, so no aliasing."""
    a = as_tensor(a)
    data = a.data[key]

    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[key] = g
        return (full,)

    return _make(data, (a,), backward_fn)


# ---------------------------------------------------------------------------
# Gather / scatter
# ---------------------------------------------------------------------------

@_op("embedding")
def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: output shape ids.shape + (width,)."""
    table = as_tensor(table)
    if table.ndim != 2:
        raise ShapeError(f"embedding: table must be 2-d; got {table.shape}")
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(
            f"embedding: ids out of range for table with {table.shape[0]} rows")
    data = table.data[ids]

    def backward_fn(g):
        gt = np.zeros_like(table.data)
        kernels.row_scatter_add(
            np.ascontiguousarray(ids.ravel()),
            np.ascontiguousarray(g.reshape(-1, table.shape[1])), gt)
        return (gt,)

    return _make(data, (table,), backward_fn)


@_op("gather_last")
def gather_last(a: Tensor, ids: np.ndarray) -> Tensor:
    """out[..., ] = a[..., ids[...]] along the last axis, one pick per row."""
    a = as_tensor(a)
    ids = np.asarray(ids)
    if ids.shape != a.shape[:-1]:
        raise ShapeError(
            f"gather_last: ids shape {ids.shape} must equal {a.shape[:-1]}")
    data = np.take_along_axis(a.data, ids[..., None], axis=-1)[..., 0]

    def backward_fn(g):
        full = np.zeros_like(a.data)
        np.put_along_axis(full, ids[..., None], g[..., None], axis=-1)
        return (full,)

    return _make(data, (a,), backward_fn)


@_op("gather_cols")
def gather_cols(a: Tensor, ids: np.ndarray) -> Tensor:
    """out[b, j] = a[b, ids[b, j]]; ids may repeat, so backward scatter-adds."""
    a = as_tensor(a)
    ids = np.asarray(ids, dtype=np.int64)
    if a.ndim != 2 or ids.ndim != 2 or ids.shape[0] != a.shape[0]:
        raise ShapeError(
            f"gather_cols: need a (rows, cols) tensor and (rows, k) ids; "
            f"got {a.shape} and {ids.shape}")
    rows = np.arange(a.shape[0])[:, None]
    data = a.data[rows, ids]

    def backward_fn(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (rows, ids), g)
        return (full,)

    return _make(data, (a,), backward_fn)


@_op("scatter_copy")
def scatter_copy(attn: Tensor, ext_ids: np.ndarray, n_ext: int) -> Tensor:
    """Pointer copy mass: out[b,t,e] = sum of attn[b,t,s] where ext_ids[b,s]==e."""
    attn = as_tensor(attn)
    ext_ids = np.asarray(ext_ids, dtype=np.int64)
    if attn.ndim != 3 or ext_ids.shape != (attn.shape[0], attn.shape[2]):
        raise ShapeError(
            f"scatter_copy: attn {attn.shape} needs ids of shape "
            f"({attn.shape[0]}, {attn.shape[2]}); got {ext_ids.shape}")
    data = kernels.scatter_copy_mass(np.ascontiguousarray(attn.data), ext_ids, n_ext)

    def backward_fn(g):
        # gradient of a scatter-add is a gather
        idx = np.broadcast_to(ext_ids[:, None, :],
                              (attn.shape[0], attn.shape[1], attn.shape[2]))
        return (np.take_along_axis(g, idx, axis=2),)

    return _make(data, (attn,), backward_fn)


@_op("straight_through")
def straight_through(probs: Tensor, onehot: np.ndarray) -> Tensor:
    """Forward emits the given hard one-hot; backward passes grads to probs."""
    probs = as_tensor(probs)
    onehot = np.asarray(onehot, dtype=np.float64)
    if onehot.shape != probs.shape:
        raise ShapeError(
            f"straight_through: onehot {onehot.shape} must match probs {probs.shape}")
    return _make(onehot.copy(), (probs,), lambda g: (g,))


# ---------------------------------------------------------------------------
# Nonlinearities and normalizations
# ---------------------------------------------------------------------------

@_op("masked_fill")
def masked_fill(a: Tensor, mask: np.ndarray, value: float) -> Tensor:
    a = as_tensor(a)
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, a.shape)
    except ValueError:
        raise ShapeError(
            f"masked_fill: mask {mask.shape} does not broadcast to {a.shape}")
    data = np.where(mask, value, a.data)
    return _make(data, (a,), lambda g: (np.where(mask, 0.0, g),))


def _softmax_data(x: np.ndarray, axis: int) -> np.ndarray:
    if axis in (-1, x.ndim - 1) and x.ndim >= 2:
        flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        return kernels.softmax_rows(flat).reshape(x.shape)
    m = x.max(axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=axis, keepdims=True)


@_op("softmax")
def softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    y = _softmax_data(a.data, axis)

    def backward_fn(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (a,), backward_fn)


@_op("masked_softmax")
def masked_softmax(a: Tensor, visible: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to visible entries; hidden entries
    get exactly zero mass. Equivalent to masked_fill with a large negative
    sentinel followed by softmax, fused for the attention hot path."""
    a = as_tensor(a)
    visible = np.asarray(visible, dtype=bool)
    if (a.ndim == 4 and visible.shape == (a.shape[0],) + a.shape[2:]):
        # per-example mask shared across heads: avoid materializing the
        # broadcast copy
        if not visible.any(axis=-1).all():
            raise ShapeError("masked_softmax: a row has no visible entries")
        y = kernels.masked_softmax_heads(np.ascontiguousarray(a.data),
                                         np.ascontiguousarray(visible))
    else:
        try:
            vis = np.broadcast_to(visible, a.shape)
        except ValueError:
            raise ShapeError(
                f"masked_softmax: mask {visible.shape} does not broadcast "
                f"to {a.shape}")
        if not vis.any(axis=-1).all():
            raise ShapeError("masked_softmax: a row has no visible entries")
        flat = np.ascontiguousarray(a.data.reshape(-1, a.shape[-1]))
        vis_flat = np.ascontiguousarray(vis.reshape(-1, a.shape[-1]))
        y = kernels.masked_softmax_rows(flat, vis_flat).reshape(a.shape)

    def backward_fn(g):
        # hidden entries have y == 0, which zeroes their gradient rows too
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (a,), backward_fn)


@_op("log_softmax")
def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    m = a.data.max(axis=axis, keepdims=True)
    shifted = a.data - m
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - lse
    y = np.exp(data)

    def backward_fn(g):
        return (g - y * g.sum(axis=axis, keepdims=True),)

    return _make(data, (a,), backward_fn)


@_op("sigmoid")
def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return _make(y, (a,), lambda g: (g * y * (1.0 - y),))


@_op("log_sigmoid")
def log_sigmoid(a: Tensor) -> Tensor:
    """log(sigmoid(x)), computed without overflow at either tail."""
    a = as_tensor(a)
    x = a.data
    data = np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))),
                    x - np.log1p(np.exp(-np.abs(x))))

    def backward_fn(g):
        return (g * (1.0 - np.where(
            x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
            np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))),)

    return _make(data, (a,), backward_fn)


@_op("gelu")
def gelu(a: Tensor) -> Tensor:
    """Gaussian error linear unit, tanh approximation."""
    a = as_tensor(a)
    x = np.ascontiguousarray(a.data)
    data, t = kernels.gelu_forward(x)

    def backward_fn(g):
        return (kernels.gelu_backward(x, t, np.ascontiguousarray(g)),)

    return _make(data, (a,), backward_fn)


@_op("layer_norm")
def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    width = a.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeError(
            f"layer_norm: gain/bias must be ({width},); got {gain.shape}, {bias.shape}")
    flat = np.ascontiguousarray(a.data.reshape(-1, width))
    y, xhat, inv_std = kernels.layer_norm_forward(flat, gain.data, bias.data, eps)

    def backward_fn(g):
        gx, dgain, dbias = kernels.layer_norm_backward(
            np.ascontiguousarray(g.reshape(-1, width)), xhat, inv_std, gain.data)
        return gx.reshape(a.shape), dgain, dbias

    return _make(y.reshape(a.shape), (a, gain, bias), backward_fn)


# ---------------------------------------------------------------------------
# Reductions and losses
# ---------------------------------------------------------------------------

@_op("sum")
def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(data, (a,), backward_fn)


@_op("mean")
def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.size if axis is None else a.shape[axis]

    def backward_fn(g):
        g = np.asarray(g) / count
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(data, (a,), backward_fn)


@_op("cross_entropy")
def cross_entropy(logits: Tensor, target_ids: np.ndarray) -> Tensor:
    """Mean over rows of -log softmax(logits)[row, target]."""
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be 2-d; got {logits.shape}")
    ids = np.asarray(target_ids, dtype=np.int64)
    if ids.shape != (logits.shape[0],):
        raise ShapeError(
            f"cross_entropy: targets {ids.shape} must be ({logits.shape[0]},)")
    n = logits.shape[0]
    m = logits.data.max(axis=1, keepdims=True)
    shifted = logits.data - m
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    data = -logp[np.arange(n), ids].mean()

    def backward_fn(g):
        probs = np.exp(logp)
        probs[np.arange(n), ids] -= 1.0
        return (g * probs / n,)

    return _make(np.asarray(data), (logits,), backward_fn)
