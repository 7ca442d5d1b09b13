"""Hot numeric loops with numba-compiled and pure-numpy implementations.

The numba path is used when numba imports cleanly; setting the environment
variable ``SOGRAN_NO_NUMBA=1`` forces the numpy path. Both paths perform the
same floating-point operations in the same order, so trained weights are
bit-identical regardless of backend (transcendentals such as the Gaussian
neighborhood are precomputed outside the kernels with numpy).
"""

import os

import numpy as np


def _numpy_som_epoch(weights, data, order, gain):
    """One online SOM epoch: sequential winner search + neighborhood pull.

    weights : (n_neurons, dim), updated in place
    data    : (n_rows, dim)
    order   : (n_rows,) int64 presentation order
    gain    : (n_neurons, n_neurons); gain[winner, i] = lr * h(winner, i)
    """
    n_neurons, dim = weights.shape
    for t in range(order.shape[0]):
        x = data[order[t]]
        diff = weights - x
        acc = diff[:, 0] * diff[:, 0]
        for d in range(1, dim):
            acc += diff[:, d] * diff[:, d]
        winner = int(np.argmin(acc))
        weights += gain[winner][:, None] * (x - weights)


def _numpy_assign_bmus(weights, data):
    """Best-matching unit index and Euclidean distance for every data row."""
    n_rows = data.shape[0]
    acc = np.zeros((n_rows, weights.shape[0]))
    for d in range(data.shape[1]):
        diff = data[:, d][:, None] - weights[:, d][None, :]
        acc += diff * diff
    idx = np.argmin(acc, axis=1)
    dist = np.sqrt(acc[np.arange(n_rows), idx])
    return idx, dist


def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def som_epoch(weights, data, order, gain):
        n_neurons, dim = weights.shape
        for t in range(order.shape[0]):
            row = order[t]
            best = 0
            best_d = np.inf
            for i in range(n_neurons):
                acc = 0.0
                for d in range(dim):
                    diff = weights[i, d] - data[row, d]
                    acc += diff * diff
                if acc < best_d:
                    best_d = acc
                    best = i
            for i in range(n_neurons):
                g = gain[best, i]
                for d in range(dim):
                    weights[i, d] += g * (data[row, d] - weights[i, d])

    @njit(cache=True)
    def assign_bmus(weights, data):
        n_rows, dim = data.shape
        n_neurons = weights.shape[0]
        idx = np.empty(n_rows, dtype=np.int64)
        dist = np.empty(n_rows)
        for r in range(n_rows):
            best = 0
            best_d = np.inf
            for i in range(n_neurons):
                acc = 0.0
                for d in range(dim):
                    diff = data[r, d] - weights[i, d]
                    acc += diff * diff
                if acc < best_d:
                    best_d = acc
                    best = i
            idx[r] = best
            dist[r] = np.sqrt(best_d)
        return idx, dist

    return som_epoch, assign_bmus


def _env_disables_numba():
    return os.environ.get("SOGRAN_NO_NUMBA", "").strip().lower() not in ("", "0")


BACKEND = "numpy"
som_epoch = _numpy_som_epoch
assign_bmus = _numpy_assign_bmus

if not _env_disables_numba():
    try:
        som_epoch, assign_bmus = _build_numba_kernels()
        BACKEND = "numba"
    except ImportError:
        pass

# Direct handles for benchmarking / cross-checking the two paths.
numpy_som_epoch = _numpy_som_epoch
numpy_assign_bmus = _numpy_assign_bmus
