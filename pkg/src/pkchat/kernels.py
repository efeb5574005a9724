"""Hot numeric kernels with a numba-compiled path and a pure-numpy fallback.

The kernels here are the loop-bound primitives that dominate training and
tagging time: row softmax (masked and plain), layer normalization, the gelu
nonlinearity, embedding-gradient scatter, the copy-mass scatter of the
pointer mixture, and the linear-chain CRF dynamic programs. Matrix products
stay on numpy/BLAS and are not wrapped.

The numba kernels are deliberately single-threaded: at desk-scale shapes the
threading layers cost more than they save, and serial loops keep every
summation order fixed.

Backend selection happens once at import time via the PKCHAT_NUMBA env var:
  PKCHAT_NUMBA=0  force the numpy fallback
  PKCHAT_NUMBA=1  require numba (import error surfaces)
  unset/other     use numba when importable, numpy otherwise

Both implementations stay importable so tests can cross-check them and
``benchmarks/bench_kernels.py`` can time them side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

_SQRT_2_OVER_PI = 0.7978845608028654
_GELU_C = 0.044715

# ---------------------------------------------------------------------------
# numpy fallback implementations
# ---------------------------------------------------------------------------


def _np_softmax_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def _np_masked_softmax_rows(x: np.ndarray, visible: np.ndarray) -> np.ndarray:
    neg = np.where(visible, x, -np.inf)
    m = neg.max(axis=1, keepdims=True)
    e = np.where(visible, np.exp(x - m), 0.0)
    return e / e.sum(axis=1, keepdims=True)


def _np_masked_softmax_heads(x: np.ndarray, visible: np.ndarray) -> np.ndarray:
    # x: (B, H, S, C), visible: (B, S, C) shared across heads
    vis = visible[:, None, :, :]
    neg = np.where(vis, x, -np.inf)
    m = neg.max(axis=3, keepdims=True)
    e = np.where(vis, np.exp(x - m), 0.0)
    return e / e.sum(axis=3, keepdims=True)


def _np_layer_norm_forward(x: np.ndarray, gain: np.ndarray, bias: np.ndarray,
                           eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = x.mean(axis=1, keepdims=True)
    centered = x - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=1) + eps)
    xhat = centered * inv_std[:, None]
    return gain * xhat + bias, xhat, inv_std


def _np_layer_norm_backward(g: np.ndarray, xhat: np.ndarray, inv_std: np.ndarray,
                            gain: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g_xhat = g * gain
    gx = inv_std[:, None] * (
        g_xhat - g_xhat.mean(axis=1, keepdims=True)
        - xhat * (g_xhat * xhat).mean(axis=1, keepdims=True))
    return gx, (g * xhat).sum(axis=0), g.sum(axis=0)


def _np_gelu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(_SQRT_2_OVER_PI * (x + _GELU_C * x ** 3))
    return 0.5 * x * (1.0 + t), t


def _np_gelu_backward(x: np.ndarray, t: np.ndarray, g: np.ndarray) -> np.ndarray:
    d_inner = _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_C * x ** 2)
    return g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner)


def _np_row_scatter_add(ids: np.ndarray, g: np.ndarray, out: np.ndarray) -> None:
    np.add.at(out, ids, g)


def _np_scatter_copy_mass(attn: np.ndarray, ext_ids: np.ndarray, n_ext: int) -> np.ndarray:
    # out[b, t, ext_ids[b, s]] += attn[b, t, s]
    b, t, s = attn.shape
    out = np.zeros((b, t, n_ext), dtype=attn.dtype)
    bi = np.arange(b)[:, None, None]
    ti = np.arange(t)[None, :, None]
    np.add.at(out, (bi, ti, ext_ids[:, None, :]), attn)
    return out


def _np_logsumexp(v: np.ndarray) -> float:
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def _np_crf_log_norm(emissions: np.ndarray, trans: np.ndarray,
                     start: np.ndarray, stop: np.ndarray) -> float:
    alpha = start + emissions[0]
    for t in range(1, emissions.shape[0]):
        scores = alpha[:, None] + trans
        m = scores.max(axis=0)
        alpha = m + np.log(np.exp(scores - m).sum(axis=0)) + emissions[t]
    return _np_logsumexp(alpha + stop)


def _np_crf_viterbi(emissions: np.ndarray, trans: np.ndarray,
                    start: np.ndarray, stop: np.ndarray) -> tuple[np.ndarray, float]:
    n, k = emissions.shape
    delta = start + emissions[0]
    back = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        scores = delta[:, None] + trans
        back[t] = scores.argmax(axis=0)
        delta = scores.max(axis=0) + emissions[t]
    delta = delta + stop
    path = np.zeros(n, dtype=np.int64)
    path[-1] = int(delta.argmax())
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(delta.max())


def _np_crf_marginals(emissions: np.ndarray, trans: np.ndarray,
                      start: np.ndarray, stop: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, float]:
    n, k = emissions.shape
    alpha = np.zeros((n, k))
    beta = np.zeros((n, k))
    alpha[0] = start + emissions[0]
    for t in range(1, n):
        scores = alpha[t - 1][:, None] + trans
        m = scores.max(axis=0)
        alpha[t] = m + np.log(np.exp(scores - m).sum(axis=0)) + emissions[t]
    beta[n - 1] = stop
    for t in range(n - 2, -1, -1):
        scores = trans + emissions[t + 1][None, :] + beta[t + 1][None, :]
        m = scores.max(axis=1)
        beta[t] = m + np.log(np.exp(scores - m[:, None]).sum(axis=1))
    log_z = _np_logsumexp(alpha[n - 1] + stop)
    node = np.exp(alpha + beta - log_z)
    edge = np.zeros((max(n - 1, 0), k, k))
    for t in range(n - 1):
        edge[t] = np.exp(alpha[t][:, None] + trans
                         + emissions[t + 1][None, :] + beta[t + 1][None, :] - log_z)
    return node, edge, log_z


_NUMPY_BACKEND = {
    "softmax_rows": _np_softmax_rows,
    "masked_softmax_rows": _np_masked_softmax_rows,
    "masked_softmax_heads": _np_masked_softmax_heads,
    "layer_norm_forward": _np_layer_norm_forward,
    "layer_norm_backward": _np_layer_norm_backward,
    "gelu_forward": _np_gelu_forward,
    "gelu_backward": _np_gelu_backward,
    "row_scatter_add": _np_row_scatter_add,
    "scatter_copy_mass": _np_scatter_copy_mass,
    "crf_log_norm": _np_crf_log_norm,
    "crf_viterbi": _np_crf_viterbi,
    "crf_marginals": _np_crf_marginals,
}

# ---------------------------------------------------------------------------
# numba implementations (explicit serial loops, compiled once, cached on disk)
# ---------------------------------------------------------------------------


def _build_numba_backend():
    from numba import njit

    @njit(cache=True)
    def softmax_rows(x):
        r, c = x.shape
        out = np.empty((r, c), dtype=x.dtype)
        for i in range(r):
            m = x[i, 0]
            for j in range(1, c):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(c):
                v = math.exp(x[i, j] - m)
                out[i, j] = v
                s += v
            inv = 1.0 / s
            for j in range(c):
                out[i, j] *= inv
        return out

    @njit(cache=True)
    def _masked_row(x, visible, out):
        c = x.shape[-1]
        m = -1e308
        for j in range(c):
            if visible[j] and x[j] > m:
                m = x[j]
        s = 0.0
        for j in range(c):
            if visible[j]:
                v = math.exp(x[j] - m)
                out[j] = v
                s += v
            else:
                out[j] = 0.0
        inv = 1.0 / s
        for j in range(c):
            out[j] *= inv

    @njit(cache=True)
    def masked_softmax_rows(x, visible):
        r, c = x.shape
        out = np.empty((r, c), dtype=x.dtype)
        for i in range(r):
            _masked_row(x[i], visible[i], out[i])
        return out

    @njit(cache=True)
    def masked_softmax_heads(x, visible):
        b, h, s, c = x.shape
        out = np.empty((b, h, s, c), dtype=x.dtype)
        for bi in range(b):
            for hi in range(h):
                for si in range(s):
                    _masked_row(x[bi, hi, si], visible[bi, si],
                                out[bi, hi, si])
        return out

    @njit(cache=True)
    def layer_norm_forward(x, gain, bias, eps):
        r, c = x.shape
        y = np.empty((r, c), dtype=x.dtype)
        xhat = np.empty((r, c), dtype=x.dtype)
        inv_std = np.empty(r, dtype=x.dtype)
        for i in range(r):
            mu = 0.0
            for j in range(c):
                mu += x[i, j]
            mu /= c
            var = 0.0
            for j in range(c):
                d = x[i, j] - mu
                var += d * d
            inv = 1.0 / math.sqrt(var / c + eps)
            inv_std[i] = inv
            for j in range(c):
                h = (x[i, j] - mu) * inv
                xhat[i, j] = h
                y[i, j] = gain[j] * h + bias[j]
        return y, xhat, inv_std

    @njit(cache=True)
    def layer_norm_backward(g, xhat, inv_std, gain):
        r, c = g.shape
        gx = np.empty((r, c), dtype=g.dtype)
        dgain = np.zeros(c, dtype=g.dtype)
        dbias = np.zeros(c, dtype=g.dtype)
        for i in range(r):
            mean_g = 0.0
            mean_gx = 0.0
            for j in range(c):
                gj = g[i, j] * gain[j]
                mean_g += gj
                mean_gx += gj * xhat[i, j]
            mean_g /= c
            mean_gx /= c
            for j in range(c):
                gj = g[i, j] * gain[j]
                gx[i, j] = inv_std[i] * (gj - mean_g - xhat[i, j] * mean_gx)
                dgain[j] += g[i, j] * xhat[i, j]
                dbias[j] += g[i, j]
        return gx, dgain, dbias

    @njit(cache=True)
    def gelu_forward(x):
        flat = x.ravel()
        y = np.empty_like(flat)
        t = np.empty_like(flat)
        for i in range(flat.shape[0]):
            v = flat[i]
            tv = math.tanh(_SQRT_2_OVER_PI * (v + _GELU_C * v * v * v))
            t[i] = tv
            y[i] = 0.5 * v * (1.0 + tv)
        return y.reshape(x.shape), t.reshape(x.shape)

    @njit(cache=True)
    def gelu_backward(x, t, g):
        xf, tf, gf = x.ravel(), t.ravel(), g.ravel()
        out = np.empty_like(xf)
        for i in range(xf.shape[0]):
            v = xf[i]
            tv = tf[i]
            d_inner = _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_C * v * v)
            out[i] = gf[i] * (0.5 * (1.0 + tv)
                              + 0.5 * v * (1.0 - tv * tv) * d_inner)
        return out.reshape(x.shape)

    @njit(cache=True)
    def row_scatter_add(ids, g, out):
        for r in range(ids.shape[0]):
            row = ids[r]
            for j in range(g.shape[1]):
                out[row, j] += g[r, j]

    @njit(cache=True)
    def scatter_copy_mass(attn, ext_ids, n_ext):
        b, t, s = attn.shape
        out = np.zeros((b, t, n_ext), dtype=attn.dtype)
        for i in range(b):
            for j in range(t):
                for p in range(s):
                    out[i, j, ext_ids[i, p]] += attn[i, j, p]
        return out

    @njit(cache=True)
    def _lse_vec(v):
        m = v[0]
        for i in range(1, v.shape[0]):
            if v[i] > m:
                m = v[i]
        s = 0.0
        for i in range(v.shape[0]):
            s += math.exp(v[i] - m)
        return m + math.log(s)

    @njit(cache=True)
    def crf_log_norm(emissions, trans, start, stop):
        n, k = emissions.shape
        alpha = np.empty(k)
        for j in range(k):
            alpha[j] = start[j] + emissions[0, j]
        work = np.empty(k)
        for t in range(1, n):
            new = np.empty(k)
            for j in range(k):
                for i in range(k):
                    work[i] = alpha[i] + trans[i, j]
                new[j] = _lse_vec(work) + emissions[t, j]
            alpha = new
        for j in range(k):
            alpha[j] += stop[j]
        return _lse_vec(alpha)

    @njit(cache=True)
    def crf_viterbi(emissions, trans, start, stop):
        n, k = emissions.shape
        delta = np.empty(k)
        for j in range(k):
            delta[j] = start[j] + emissions[0, j]
        back = np.zeros((n, k), dtype=np.int64)
        for t in range(1, n):
            new = np.empty(k)
            for j in range(k):
                best = delta[0] + trans[0, j]
                arg = 0
                for i in range(1, k):
                    v = delta[i] + trans[i, j]
                    if v > best:
                        best = v
                        arg = i
                new[j] = best + emissions[t, j]
                back[t, j] = arg
            delta = new
        best = delta[0] + stop[0]
        arg = 0
        for j in range(1, k):
            v = delta[j] + stop[j]
            if v > best:
                best = v
                arg = j
        path = np.zeros(n, dtype=np.int64)
        path[n - 1] = arg
        for t in range(n - 1, 0, -1):
            path[t - 1] = back[t, path[t]]
        return path, best

    @njit(cache=True)
    def crf_marginals(emissions, trans, start, stop):
        n, k = emissions.shape
        alpha = np.zeros((n, k))
        beta = np.zeros((n, k))
        work = np.empty(k)
        for j in range(k):
            alpha[0, j] = start[j] + emissions[0, j]
        for t in range(1, n):
            for j in range(k):
                for i in range(k):
                    work[i] = alpha[t - 1, i] + trans[i, j]
                alpha[t, j] = _lse_vec(work) + emissions[t, j]
        for j in range(k):
            beta[n - 1, j] = stop[j]
        for t in range(n - 2, -1, -1):
            for i in range(k):
                for j in range(k):
                    work[j] = trans[i, j] + emissions[t + 1, j] + beta[t + 1, j]
                beta[t, i] = _lse_vec(work)
        for j in range(k):
            work[j] = alpha[n - 1, j] + stop[j]
        log_z = _lse_vec(work)
        node = np.empty((n, k))
        for t in range(n):
            for j in range(k):
                node[t, j] = math.exp(alpha[t, j] + beta[t, j] - log_z)
        m = n - 1
        if m < 0:
            m = 0
        edge = np.zeros((m, k, k))
        for t in range(n - 1):
            for i in range(k):
                for j in range(k):
                    edge[t, i, j] = math.exp(alpha[t, i] + trans[i, j]
                                             + emissions[t + 1, j] + beta[t + 1, j] - log_z)
        return node, edge, log_z

    return {
        "softmax_rows": softmax_rows,
        "masked_softmax_rows": masked_softmax_rows,
        "masked_softmax_heads": masked_softmax_heads,
        "layer_norm_forward": layer_norm_forward,
        "layer_norm_backward": layer_norm_backward,
        "gelu_forward": gelu_forward,
        "gelu_backward": gelu_backward,
        "row_scatter_add": row_scatter_add,
        "scatter_copy_mass": scatter_copy_mass,
        "crf_log_norm": crf_log_norm,
        "crf_viterbi": crf_viterbi,
        "crf_marginals": crf_marginals,
    }


def _select_backend() -> tuple[str, dict]:
    flag = os.environ.get("PKCHAT_NUMBA", "").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return "numpy", _NUMPY_BACKEND
    try:
        backend = _build_numba_backend()
        return "numba", backend
    except ImportError:
        if flag in ("1", "on", "true", "yes"):
            raise
        return "numpy", _NUMPY_BACKEND


BACKEND_NAME, _ACTIVE = _select_backend()

softmax_rows = _ACTIVE["softmax_rows"]
masked_softmax_rows = _ACTIVE["masked_softmax_rows"]
masked_softmax_heads = _ACTIVE["masked_softmax_heads"]
layer_norm_forward = _ACTIVE["layer_norm_forward"]
layer_norm_backward = _ACTIVE["layer_norm_backward"]
gelu_forward = _ACTIVE["gelu_forward"]
gelu_backward = _ACTIVE["gelu_backward"]
row_scatter_add = _ACTIVE["row_scatter_add"]
scatter_copy_mass = _ACTIVE["scatter_copy_mass"]
crf_log_norm = _ACTIVE["crf_log_norm"]
crf_viterbi = _ACTIVE["crf_viterbi"]
crf_marginals = _ACTIVE["crf_marginals"]


def available_backends() -> dict[str, dict]:
    """All importable backends, keyed by name (for tests and benchmarks)."""
    out = {"numpy": _NUMPY_BACKEND}
    try:
        out["numba"] = _build_numba_backend()
    except ImportError:
        pass
    return out
