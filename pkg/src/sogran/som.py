"""Kohonen self-organizing maps on rectangular grids.

Used in two roles: a 2-D map over the joint (condition + decision) space
produces the crisp granules, and tiny 1-D maps discretize single attributes
into ordered classes.

Training is online (one weight update per presented datum) with a Gaussian
grid neighborhood; learning rate and radius decay exponentially across
epochs. The per-datum inner loop lives in ``_kernels`` (numba or numpy).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import DataTable


@dataclass
class SomCodebook:
    """Weight vectors of an n1 x n2 grid (rectangular metric, unit spacing)."""

    n1: int
    n2: int
    weights: np.ndarray  # (n1 * n2, dim)
    names: list[str] | None = None

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.weights.shape[0] != self.n1 * self.n2:
            raise ValueError("weight count does not match grid size")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite codebook weight")

    @property
    def n_neurons(self) -> int:
        return self.n1 * self.n2

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def grid_coords(self) -> np.ndarray:
        """(n_neurons, 2) array of (row, col) grid positions."""
        idx = np.arange(self.n_neurons)
        return np.column_stack([idx // self.n2, idx % self.n2]).astype(np.float64)


@dataclass
class SomTrainParams:
    epochs: int = 40
    lr0: float = 0.5
    lr_end: float = 0.01
    sigma0: float | None = None  # default: max(n1, n2) / 2
    sigma_end: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0 < self.lr0 <= 1):
            raise ValueError("lr0 must be in (0, 1]")
        if not (0 < self.lr_end <= self.lr0):
            raise ValueError("lr_end must be in (0, lr0]")
        if self.sigma_end <= 0:
            raise ValueError("sigma_end must be > 0")
        if self.sigma0 is not None and self.sigma0 < self.sigma_end:
            raise ValueError("sigma0 must be >= sigma_end")


@dataclass
class SomTrainStats:
    qe_per_epoch: np.ndarray  # mean quantization error after each epoch


@dataclass
class Discretizer1D:
    """Maps a real attribute to k ordered classes via 1-D SOM thresholds."""

    k: int
    thresholds: np.ndarray  # (k - 1,) strictly increasing
    attribute: int | None = None

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.thresholds.shape != (self.k - 1,):
            raise ValueError("need exactly k - 1 thresholds")
        if self.k > 1 and not np.all(np.diff(self.thresholds) > 0):
            raise ValueError("thresholds must be strictly increasing")

    def label(self, value: float) -> int:
        """Class of a value: the count of thresholds strictly below it."""
        return int(np.searchsorted(self.thresholds, value, side="left"))

    def labels(self, values: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.thresholds, np.asarray(values), side="left")


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, DataTable):
        return np.ascontiguousarray(data.values, dtype=np.float64)
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("data must be 2-D (rows x attributes)")
    return arr


def init_grid(n1: int, n2: int, data, seed: int = 0) -> SomCodebook:
    """Random codebook with weights uniform inside the per-dimension data bounds."""
    matrix = _as_matrix(data)
    if matrix.shape[0] < 1:
        raise ValueError("empty data")
    rng = np.random.default_rng(seed)
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    weights = rng.uniform(lo, hi, size=(n1 * n2, matrix.shape[1]))
    names = list(data.names) if isinstance(data, DataTable) else None
    return SomCodebook(n1, n2, weights, names)


def bmu(codebook: SomCodebook, x) -> int:
    """Index of the nearest neuron (Euclidean); ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (codebook.dim,):
        raise ValueError(f"input has shape {x.shape}, codebook dim is {codebook.dim}")
    idx, _ = _kernels.assign_bmus(codebook.weights, x[None, :])
    return int(idx[0])


def _schedule(v0: float, v_end: float, epochs: int) -> np.ndarray:
    """Exponential interpolation from v0 (epoch 0) to v_end (last epoch)."""
    if epochs == 1:
        return np.array([v0])
    e = np.arange(epochs) / (epochs - 1)
    return v0 * (v_end / v0) ** e


def train(
    codebook: SomCodebook, data, params: SomTrainParams
) -> tuple[SomCodebook, SomTrainStats]:
    """Online Kohonen training; returns a new codebook plus per-epoch stats.

    Presentation order is reshuffled every epoch from the params seed, so a
    (codebook, data, params) triple always trains to the same weights.
    """
    matrix = _as_matrix(data)
    if matrix.shape[0] < 1:
        raise ValueError("empty data")
    if matrix.shape[1] != codebook.dim:
        raise ValueError("data dimension does not match codebook")

    weights = codebook.weights.copy()
    coords = codebook.grid_coords()
    delta = coords[:, None, :] - coords[None, :, :]
    grid_d2 = (delta**2).sum(axis=2)  # (n_neurons, n_neurons)

    sigma0 = params.sigma0
    if sigma0 is None:
        sigma0 = max(codebook.n1, codebook.n2) / 2.0
    sigma_end = min(params.sigma_end, sigma0)
    lrs = _schedule(params.lr0, params.lr_end, params.epochs)
    sigmas = _schedule(sigma0, sigma_end, params.epochs)

    rng = np.random.default_rng(params.seed)
    qe = np.empty(params.epochs)
    for e in range(params.epochs):
        # Neighborhood gains are precomputed here (numpy in both backends)
        # so the kernel inner loop is free of transcendentals.
        gain = lrs[e] * np.exp(-grid_d2 / (2.0 * sigmas[e] ** 2))
        order = rng.permutation(matrix.shape[0]).astype(np.int64)
        _kernels.som_epoch(weights, matrix, order, gain)
        _, dist = _kernels.assign_bmus(weights, matrix)
        qe[e] = dist.mean()

    trained = SomCodebook(codebook.n1, codebook.n2, weights, codebook.names)
    return trained, SomTrainStats(qe_per_epoch=qe)


def quantization_error(codebook: SomCodebook, data) -> float:
    """Mean Euclidean distance from each data row to its BMU."""
    matrix = _as_matrix(data)
    if matrix.shape[0] < 1:
        raise ValueError("empty data")
    if matrix.shape[1] != codebook.dim:
        raise ValueError("data dimension does not match codebook")
    _, dist = _kernels.assign_bmus(codebook.weights, matrix)
    return float(dist.mean())


def codebook_granules(codebook: SomCodebook) -> DataTable:
    """The codebook as a reduced data table: one row per neuron.

    The codebook must have been trained over the joint (condition + decision)
    space, so the last weight component is the granule's decision value.
    """
    names = codebook.names
    if names is None:
        names = [f"v{i + 1}" for i in range(codebook.dim - 1)] + ["y"]
    return DataTable(list(names), codebook.weights.copy())


def dead_neuron_count(codebook: SomCodebook, data) -> int:
    """Number of neurons that are the BMU of zero data rows."""
    matrix = _as_matrix(data)
    if matrix.shape[1] != codebook.dim:
        raise ValueError("data dimension does not match codebook")
    idx, _ = _kernels.assign_bmus(codebook.weights, matrix)
    return codebook.n_neurons - np.unique(idx).size


def fit_discretizer(values, k: int = 3, seed: int = 0) -> Discretizer1D:
    """Train a k-neuron 1-D SOM on scalar values and cut at weight midpoints.

    Labels are ordered low -> high: label(v) counts the thresholds below v.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    n_distinct = np.unique(values).size
    if n_distinct < k:
        raise ValueError(
            f"need at least {k} distinct values to fit {k} classes, got {n_distinct}"
        )
    codebook = init_grid(1, k, values, seed=seed)
    trained, _ = train(codebook, values, SomTrainParams(seed=seed))
    centers = np.sort(trained.weights[:, 0])
    thresholds = (centers[:-1] + centers[1:]) / 2.0
    if k > 1 and not np.all(np.diff(thresholds) > 0):
        raise ValueError("degenerate discretizer: collapsed class centers")
    return Discretizer1D(k=k, thresholds=thresholds)


def format_codebook(codebook: SomCodebook) -> str:
    """CSV text of the codebook: grid row, grid col, weight components."""
    dim = codebook.dim
    header = "row,col," + ",".join(f"w{d + 1}" for d in range(dim))
    lines = [header]
    for i in range(codebook.n_neurons):
        r, c = divmod(i, codebook.n2)
        comps = ",".join(repr(float(v)) for v in codebook.weights[i])
        lines.append(f"{r},{c},{comps}")
    return "\n".join(lines) + "\n"
