import os
import subprocess
import sys

import numpy as np
import pytest

from sogran import _kernels


def _workload(seed, n_neurons=23, dim=4, n_rows=100):
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0, 1, (n_neurons, dim))
    data = np.ascontiguousarray(rng.uniform(0, 1, (n_rows, dim)))
    order = rng.permutation(n_rows).astype(np.int64)
    gain = rng.uniform(0, 0.5, (n_neurons, n_neurons))
    return weights, data, order, gain


numba_available = _kernels.BACKEND == "numba"


@pytest.mark.skipif(not numba_available, reason="numba backend not active")
class TestBackendEquivalence:
    def test_som_epoch_bit_identical(self):
        for seed in range(5):
            weights_nb, data, order, gain = _workload(seed)
            weights_np = weights_nb.copy()
            _kernels.som_epoch(weights_nb, data, order, gain)
            _kernels.numpy_som_epoch(weights_np, data, order, gain)
            assert np.array_equal(weights_nb, weights_np)

    def test_assign_bmus_bit_identical(self):
        for seed in range(5):
            weights, data, _, _ = _workload(seed + 50)
            idx_nb, dist_nb = _kernels.assign_bmus(weights, data)
            idx_np, dist_np = _kernels.numpy_assign_bmus(weights, data)
            assert np.array_equal(idx_nb, idx_np)
            assert np.array_equal(dist_nb, dist_np)

    def test_degenerate_shapes(self):
        # single neuron, single dimension, single row
        weights = np.array([[0.25]])
        data = np.array([[0.75]])
        order = np.array([0], dtype=np.int64)
        gain = np.array([[0.5]])
        w_nb, w_np = weights.copy(), weights.copy()
        _kernels.som_epoch(w_nb, data, order, gain)
        _kernels.numpy_som_epoch(w_np, data, order, gain)
        assert np.array_equal(w_nb, w_np)
        assert w_nb[0, 0] == 0.5


def test_env_flag_forces_numpy_backend():
    env = dict(os.environ, SOGRAN_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from sogran import _kernels; print(_kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_numpy_tie_break_matches_first_minimum():
    weights = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])  # 0 and 2 tie
    idx, _ = _kernels.numpy_assign_bmus(weights, np.array([[1.0, 0.0]]))
    assert idx[0] == 0
