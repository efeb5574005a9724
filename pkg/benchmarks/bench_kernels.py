"""Time the numba kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--repeats N]

Shapes mirror what one training step of the default toy configuration
actually pushes through the kernels. Each row also reports the max abs
difference between the two paths on identical inputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pkchat import kernels


def timeit(fn, *args, repeats=20):
    fn(*args)  # warm (includes JIT compilation on the numba path)
    start = time.perf_counter()
    for _ in range(repeats):
        out = fn(*args)
    return (time.perf_counter() - start) / repeats * 1000, out


def first_array(result):
    if isinstance(result, tuple):
        return result[0]
    return result if isinstance(result, np.ndarray) else np.asarray(result)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if "numba" not in backends:
        print("numba unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)

    attention = rng.normal(size=(16, 4, 110, 110))
    vis = rng.random((16, 110, 110)) > 0.3
    vis[..., 0] = True
    ln_x = rng.normal(size=(2800, 64))
    gain, bias = rng.normal(size=64), rng.normal(size=64)
    gelu_x = rng.normal(size=(16, 110, 128))
    attn = rng.random((8, 15, 90))
    attn /= attn.sum(axis=2, keepdims=True)
    ext_ids = rng.integers(0, 600, size=(8, 90))
    emissions = rng.normal(size=(40, 3))
    trans = rng.normal(size=(3, 3))
    start, stop = rng.normal(size=3), rng.normal(size=3)

    cases = [
        ("softmax_rows", (np.ascontiguousarray(attention.reshape(-1, 110)),)),
        ("masked_softmax_heads", (attention, vis)),
        ("layer_norm_forward", (ln_x, gain, bias, 1e-5)),
        ("gelu_forward", (gelu_x,)),
        ("scatter_copy_mass", (attn, ext_ids, 620)),
        ("crf_log_norm", (emissions, trans, start, stop)),
        ("crf_viterbi", (emissions, trans, start, stop)),
        ("crf_marginals", (emissions, trans, start, stop)),
    ]

    print(f"{'kernel':<22} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max diff':>10}")
    for name, case_args in cases:
        np_ms, np_out = timeit(backends["numpy"][name], *case_args,
                               repeats=args.repeats)
        nb_ms, nb_out = timeit(backends["numba"][name], *case_args,
                               repeats=args.repeats)
        diff = float(np.max(np.abs(first_array(np_out) - first_array(nb_out))))
        print(f"{name:<22} {np_ms:>10.3f} {nb_ms:>10.3f} "
              f"{np_ms / nb_ms:>7.1f}x {diff:>10.2e}")
    print(f"\nactive backend for this environment: {kernels.BACKEND_NAME}")
    print("set PKCHAT_NUMBA=0 to force the numpy fallback")


if __name__ == "__main__":
    main()
