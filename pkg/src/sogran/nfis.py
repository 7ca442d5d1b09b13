"""TSK fuzzy inference with hybrid training.

Each rule has one multivariate Gaussian premise (a center and width per
input dimension) and an affine consequent (first order by default; a
constant zero-order variant is available). Output is the firing-strength
weighted average of the per-rule consequent values; when every rule fires
below the floor, weights fall back to uniform so the output stays finite.

Training is the classic hybrid scheme: consequents by linear least squares
with premises held fixed, premises by gradient descent on the mean squared
training error.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import DataTable


@dataclass
class TskModel:
    centers: np.ndarray  # (n_rules, c)
    widths: np.ndarray  # (n_rules, c), strictly positive
    coeffs: np.ndarray  # (n_rules, c + 1): linear weights then bias
    width_floor: np.ndarray  # (c,) lower bound re-applied during training
    firing_floor: float = 1e-12
    order: int = 1  # 1 = affine consequents, 0 = constant consequents

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.widths = np.asarray(self.widths, dtype=np.float64)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        self.width_floor = np.asarray(self.width_floor, dtype=np.float64)
        if np.any(self.widths <= 0):
            raise ValueError("premise widths must be strictly positive")
        if not (0 < self.firing_floor <= 1e-3):
            raise ValueError("firing_floor must be in (0, 1e-3]")
        if self.order not in (0, 1):
            raise ValueError("order must be 0 or 1")

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]


@dataclass
class NfisTrainParams:
    epochs: int = 10
    lr: float = 0.05
    firing_floor: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0 < self.firing_floor <= 1e-3):
            raise ValueError("firing_floor must be in (0, 1e-3]")


def _kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 100):
    """Seeded deterministic Lloyd iteration; empty clusters are repaired by
    stealing the point that is currently worst-fit by its own centroid."""
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    centers = points[rng.choice(n, size=k, replace=False)].copy()
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        for j in range(k):
            if not np.any(new_assign == j):
                fit = d2[np.arange(n), new_assign].copy()
                # keep singleton clusters intact so the repair cannot cascade
                counts = np.bincount(new_assign, minlength=k)
                fit[counts[new_assign] <= 1] = -1.0
                new_assign[int(np.argmax(fit))] = j
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            centers[j] = points[assign == j].mean(axis=0)
    return centers, assign


def init_tsk(
    n_rules: int,
    train: DataTable,
    seed: int = 0,
    firing_floor: float = 1e-12,
    order: int = 1,
) -> TskModel:
    """Place rule premises on k-means clusters of the condition space.

    Widths start at the per-dimension cluster standard deviation, floored at
    5% of the attribute range (plus a tiny absolute floor so constant
    attributes keep positive widths). Consequents start at zero.
    """
    if n_rules < 1:
        raise ValueError("n_rules must be >= 1")
    if train.n_rows < n_rules:
        raise ValueError(
            f"need at least {n_rules} training rows, got {train.n_rows}"
        )
    x = train.conditions
    centers, assign = _kmeans(x, n_rules, seed)
    spans = x.max(axis=0) - x.min(axis=0)
    floor = np.maximum(0.05 * spans, 1e-6)
    widths = np.empty_like(centers)
    for j in range(n_rules):
        widths[j] = x[assign == j].std(axis=0)
    widths = np.maximum(widths, floor)
    coeffs = np.zeros((n_rules, x.shape[1] + 1))
    return TskModel(centers, widths, coeffs, floor, firing_floor, order)


def _firing(model: TskModel, x: np.ndarray) -> np.ndarray:
    """Rule firing strengths for a batch: (n, n_rules)."""
    z = (x[:, None, :] - model.centers[None, :, :]) / model.widths[None, :, :]
    return np.exp(-0.5 * (z**2).sum(axis=2))


def _normalized_firing(model: TskModel, x: np.ndarray) -> np.ndarray:
    w = _firing(model, x)
    s = w.sum(axis=1)
    starved = s < model.firing_floor
    safe = np.where(starved, 1.0, s)
    wn = w / safe[:, None]
    wn[starved] = 1.0 / model.n_rules
    return wn


def _rule_outputs(model: TskModel, x: np.ndarray) -> np.ndarray:
    if model.order == 0:
        return np.broadcast_to(model.coeffs[:, -1], (x.shape[0], model.n_rules))
    return x @ model.coeffs[:, :-1].T + model.coeffs[:, -1]


def eval_batch(model: TskModel, x) -> np.ndarray:
    """Model output for every row of a (n, c) condition matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise ValueError(f"expected (n, {model.n_inputs}) conditions")
    return (_normalized_firing(model, x) * _rule_outputs(model, x)).sum(axis=1)


def eval_tsk(model: TskModel, x) -> float:
    """Model output for a single condition vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_inputs,):
        raise ValueError(f"expected a length-{model.n_inputs} vector")
    return float(eval_batch(model, x[None, :])[0])


def _design_matrix(model: TskModel, x: np.ndarray) -> np.ndarray:
    wn = _normalized_firing(model, x)  # (n, R)
    if model.order == 0:
        return wn  # one bias coefficient per rule
    xe = np.column_stack([x, np.ones(x.shape[0])])  # (n, c + 1)
    design = wn[:, :, None] * xe[:, None, :]  # (n, R, c + 1)
    return design.reshape(x.shape[0], -1)


# Singular values below this fraction of the largest are treated as rank
# deficiency. Barely-firing rules produce design columns ~1e-10 of the rest;
# inverting those turns interpolation into wild extrapolation.
_LSE_RCOND = 1e-8


def fit_consequents_lse(model: TskModel, train: DataTable) -> TskModel:
    """Least-squares consequents with premises fixed.

    Solved with a rank-tolerant SVD decomposition: underdetermined or
    near-singular systems get the least-norm solution over the
    well-conditioned subspace, keeping coefficients bounded.
    """
    design = _design_matrix(model, train.conditions)
    if not np.all(np.isfinite(design)):
        raise ValueError("non-finite entries in the least-squares design matrix")
    sol, *_ = np.linalg.lstsq(design, train.decisions, rcond=_LSE_RCOND)
    if model.order == 0:
        coeffs = np.zeros((model.n_rules, model.n_inputs + 1))
        coeffs[:, -1] = sol
    else:
        coeffs = sol.reshape(model.n_rules, model.n_inputs + 1)
    return replace(model, coeffs=coeffs)


def premise_gradient(
    model: TskModel, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the mean squared error wrt centers and widths.

    Rows firing below the floor use uniform weights, where the output does
    not depend on the premises; their gradient contribution is zero.
    """
    n = x.shape[0]
    w = _firing(model, x)
    s = w.sum(axis=1)
    starved = s < model.firing_floor
    safe = np.where(starved, 1.0, s)
    wn = w / safe[:, None]
    wn[starved] = 1.0 / model.n_rules
    f = _rule_outputs(model, x)
    y_hat = (wn * f).sum(axis=1)
    resid = y_hat - y
    # dE/dw_ir = (2/n) * resid_i * (f_ir - y_hat_i) / s_i, zero when starved
    g = (2.0 / n) * resid[:, None] * (f - y_hat[:, None]) / safe[:, None]
    g[starved] = 0.0
    gw = g * w  # (n, R)
    diff = x[:, None, :] - model.centers[None, :, :]  # (n, R, c)
    grad_centers = np.einsum("nr,nrc->rc", gw, diff) / model.widths**2
    grad_widths = np.einsum("nr,nrc->rc", gw, diff**2) / model.widths**3
    return grad_centers, grad_widths


def training_mse(model: TskModel, train: DataTable) -> float:
    resid = eval_batch(model, train.conditions) - train.decisions
    return float(np.mean(resid**2))


def train_hybrid(
    model: TskModel, train: DataTable, params: NfisTrainParams
) -> tuple[TskModel, np.ndarray]:
    """Hybrid training: least-squares consequents + premise gradient steps.

    Every epoch takes one gradient step on centers/widths (widths re-floored)
    and then refits the consequents; with epochs=0 this reduces to a single
    fit_consequents_lse. History holds the training RMSE after each
    consequent fit, so it has epochs + 1 entries.
    """
    model = replace(model, firing_floor=params.firing_floor)
    model = fit_consequents_lse(model, train)
    history = [rmse(model, train)]
    x, y = train.conditions, train.decisions
    for _ in range(params.epochs):
        grad_c, grad_w = premise_gradient(model, x, y)
        centers = model.centers - params.lr * grad_c
        widths = np.maximum(model.widths - params.lr * grad_w, model.width_floor)
        model = replace(model, centers=centers, widths=widths)
        model = fit_consequents_lse(model, train)
        history.append(rmse(model, train))
    return model, np.array(history)


def root_mean_square_error(predicted, actual) -> float:
    """sqrt(sum((p - a)^2) / m)."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape or predicted.size == 0:
        raise ValueError("prediction/target vectors must match and be non-empty")
    return math.sqrt(float(np.mean((predicted - actual) ** 2)))


def rmse(model: TskModel, test: DataTable) -> float:
    """Root mean square error of the model over a test table."""
    return root_mean_square_error(eval_batch(model, test.conditions), test.decisions)


def format_tsk(model: TskModel, names: list[str] | None = None) -> str:
    """CSV-like dump: rule index, centers, widths, consequent coefficients."""
    c = model.n_inputs
    if names is None:
        names = [f"x{i + 1}" for i in range(c)]
    cols = (
        ["rule"]
        + [f"center_{n}" for n in names[:c]]
        + [f"width_{n}" for n in names[:c]]
        + [f"coef_{n}" for n in names[:c]]
        + ["bias"]
    )
    lines = [",".join(cols)]
    for r in range(model.n_rules):
        vals = (
            list(model.centers[r]) + list(model.widths[r]) + list(model.coeffs[r])
        )
        lines.append(str(r) + "," + ",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
