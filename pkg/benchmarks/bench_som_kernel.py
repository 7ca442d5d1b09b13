#!/usr/bin/env python3
"""Benchmark the numba-compiled SOM kernels against the pure-numpy fallback.

Times one training epoch (600 rows, 4 dims, varying grid sizes) plus the
batched BMU assignment, checks the two paths produce bit-identical output,
and prints the speedups. Run as:

    python benchmarks/bench_som_kernel.py
"""

import time

import numpy as np

from sogran import _kernels

EPOCH_REPEATS = {12: 40, 48: 20, 150: 10}
N_ROWS = 600
DIM = 4


def _workload(n_neurons, seed):
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0, 1, (n_neurons, DIM))
    data = np.ascontiguousarray(rng.uniform(0, 1, (N_ROWS, DIM)))
    order = rng.permutation(N_ROWS).astype(np.int64)
    gain = rng.uniform(0, 0.5, (n_neurons, n_neurons))
    return weights, data, order, gain


def _time(fn, repeats, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    try:
        from sogran._kernels import _build_numba_kernels

        nb_epoch, nb_assign = _build_numba_kernels()
    except ImportError:
        print("numba is not importable; nothing to compare")
        return

    # warm up the JIT before timing
    w, d, o, g = _workload(12, 0)
    nb_epoch(w.copy(), d, o, g)
    nb_assign(w, d)

    print(f"SOM kernels, {N_ROWS} rows x {DIM} dims (best of N repeats)")
    print(f"{'neurons':>8} {'numpy epoch':>12} {'numba epoch':>12} {'speedup':>8}"
          f" {'identical':>10}")
    for n_neurons, repeats in EPOCH_REPEATS.items():
        weights, data, order, gain = _workload(n_neurons, n_neurons)
        w_np, w_nb = weights.copy(), weights.copy()
        t_np = _time(
            lambda: _kernels.numpy_som_epoch(w_np.copy(), data, order, gain), repeats
        )
        t_nb = _time(lambda: nb_epoch(w_nb.copy(), data, order, gain), repeats)
        _kernels.numpy_som_epoch(w_np, data, order, gain)
        nb_epoch(w_nb, data, order, gain)
        same = np.array_equal(w_np, w_nb)
        print(
            f"{n_neurons:>8} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms"
            f" {t_np / t_nb:>7.1f}x {str(same):>10}"
        )

    print()
    print(f"{'neurons':>8} {'numpy bmu':>12} {'numba bmu':>12} {'speedup':>8}"
          f" {'identical':>10}")
    for n_neurons, repeats in EPOCH_REPEATS.items():
        weights, data, _, _ = _workload(n_neurons, n_neurons + 100)
        t_np = _time(lambda: _kernels.numpy_assign_bmus(weights, data), repeats * 3)
        t_nb = _time(lambda: nb_assign(weights, data), repeats * 3)
        idx_np, dist_np = _kernels.numpy_assign_bmus(weights, data)
        idx_nb, dist_nb = nb_assign(weights, data)
        same = np.array_equal(idx_np, idx_nb) and np.array_equal(dist_np, dist_nb)
        print(
            f"{n_neurons:>8} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms"
            f" {t_np / t_nb:>7.1f}x {str(same):>10}"
        )


if __name__ == "__main__":
    main()
