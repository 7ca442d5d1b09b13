"""Parameter sweeps over the feedback coefficients, with order/disorder
statistics of the neuron-growth trajectories.

Each sweep cell is one full feedback run at a (alpha, beta, seed) point.
Cells are independent, seeded deterministically, and may execute in parallel;
a cell that raises records an error marker instead of aborting the sweep.

The disorder statistic is the pooled standard deviation of the post-burn-in
neuron budgets across a point's seeds. The transition detector reads off the
first axis interval where that statistic jumps relative to its running
minimum; it is a reporting heuristic, not a calibrated measurement, and the
CLI always prints the raw statistics next to it.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .controller import RunConfig, RunTrace, run
from .dataset import DataTable


@dataclass
class SweepSpec:
    base: RunConfig
    alphas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    n_seeds: int = 1
    burn_in: int | None = None  # default: first third of the steps

    def __post_init__(self):
        if not self.alphas:
            self.alphas = [self.base.alpha]
        if not self.betas:
            self.betas = [self.base.beta]
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if self.burn_in is not None and not (0 <= self.burn_in < self.base.steps):
            raise ValueError("burn_in must be in [0, steps)")

    @property
    def resolved_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return self.base.steps // 3


@dataclass
class CellResult:
    alpha: float
    beta: float
    seed_index: int
    master_seed: int
    trace: RunTrace | None = None
    error: str | None = None


@dataclass
class PointStats:
    mean_ng: float
    std_ng: float
    mean_e: float
    std_e: float
    mean_dead_frac: float
    n_cells: int


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list[CellResult]
    stats: dict[tuple[float, float], PointStats]

    @property
    def burn_in(self) -> int:
        return self.spec.resolved_burn_in

    def point_cells(self, alpha: float, beta: float) -> list[CellResult]:
        return [c for c in self.cells if c.alpha == alpha and c.beta == beta]


def _cell_seed(base_seed: int, seed_index: int) -> int:
    return int(np.random.SeedSequence([base_seed, 2, seed_index]).generate_state(1)[0])


def _cell_configs(spec: SweepSpec) -> list[tuple[float, float, int, RunConfig]]:
    cells = []
    for alpha in spec.alphas:
        for beta in spec.betas:
            for s in range(spec.n_seeds):
                cfg = replace(
                    spec.base,
                    alpha=alpha,
                    beta=beta,
                    seed=_cell_seed(spec.base.seed, s),
                )
                cells.append((alpha, beta, s, cfg))
    return cells


def _run_cell(args):
    cfg, train_table, test = args
    return run(cfg, train_table, test)


def _point_values(traces: list[RunTrace], burn_in: int):
    ng = np.array(
        [r.n_budget for tr in traces for r in tr.records[burn_in:]], dtype=np.float64
    )
    e = np.array(
        [r.error for tr in traces for r in tr.records[burn_in:]], dtype=np.float64
    )
    dead = np.array(
        [
            r.dead_neurons / r.n_actual
            for tr in traces
            for r in tr.records[burn_in:]
        ],
        dtype=np.float64,
    )
    return ng, e, dead


def _point_stats(traces: list[RunTrace], burn_in: int) -> PointStats:
    if not traces:
        nan = float("nan")
        return PointStats(nan, nan, nan, nan, nan, 0)
    ng, e, dead = _point_values(traces, burn_in)
    return PointStats(
        mean_ng=float(ng.mean()),
        std_ng=float(ng.std()),
        mean_e=float(e.mean()),
        std_e=float(e.std()),
        mean_dead_frac=float(dead.mean()),
        n_cells=len(traces),
    )


def compute_stats(
    cells: list[CellResult], spec: SweepSpec
) -> dict[tuple[float, float], PointStats]:
    burn_in = spec.resolved_burn_in
    stats = {}
    for alpha in spec.alphas:
        for beta in spec.betas:
            traces = [
                c.trace
                for c in cells
                if c.alpha == alpha and c.beta == beta and c.trace is not None
            ]
            stats[(alpha, beta)] = _point_stats(traces, burn_in)
    return stats


def run_sweep(
    spec: SweepSpec, train_table: DataTable, test: DataTable, workers: int = 1
) -> SweepResult:
    """Execute every (alpha, beta, seed) cell; aggregate post-burn-in stats.

    Results keep the deterministic cell ordering whatever the execution
    order; failed cells carry an error string instead of a trace.
    """
    configs = _cell_configs(spec)
    traces: list[RunTrace | None] = [None] * len(configs)
    errors: list[str | None] = [None] * len(configs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                i: pool.submit(_run_cell, (cfg, train_table, test))
                for i, (_, _, _, cfg) in enumerate(configs)
            }
            for i, fut in futures.items():
                try:
                    traces[i] = fut.result()
                except Exception as exc:  # record, don't poison the sweep
                    errors[i] = f"{type(exc).__name__}: {exc}"
    else:
        for i, (_, _, _, cfg) in enumerate(configs):
            try:
                traces[i] = _run_cell((cfg, train_table, test))
            except Exception as exc:
                errors[i] = f"{type(exc).__name__}: {exc}"
    cells = [
        CellResult(
            alpha=a,
            beta=b,
            seed_index=s,
            master_seed=cfg.seed,
            trace=traces[i],
            error=errors[i],
        )
        for i, (a, b, s, cfg) in enumerate(configs)
    ]
    return SweepResult(spec=spec, cells=cells, stats=compute_stats(cells, spec))


def _stats_equal(a: PointStats, b: PointStats) -> bool:
    # exact equality, except NaN == NaN (points whose every cell errored)
    for name in ("mean_ng", "std_ng", "mean_e", "std_e", "mean_dead_frac"):
        va, vb = getattr(a, name), getattr(b, name)
        if va != vb and not (np.isnan(va) and np.isnan(vb)):
            return False
    return a.n_cells == b.n_cells


def verify(result: SweepResult) -> None:
    """Check the stored aggregates against a recomputation from the traces."""
    fresh = compute_stats(result.cells, result.spec)
    for key, stat in result.stats.items():
        if not _stats_equal(fresh[key], stat):
            raise ValueError(f"aggregate mismatch at {key}: {stat} != {fresh[key]}")


def _resolve_point(result: SweepResult, at) -> tuple[float, float]:
    spec = result.spec
    if isinstance(at, tuple):
        point = (float(at[0]), float(at[1]))
    elif len(spec.betas) == 1:
        point = (float(at), spec.betas[0])
    elif len(spec.alphas) == 1:
        point = (spec.alphas[0], float(at))
    else:
        raise ValueError("grid sweep: pass an (alpha, beta) pair")
    if point not in result.stats:
        raise ValueError(f"unknown sweep point {point}")
    return point


def disorder_statistic(result: SweepResult, at) -> float:
    """Pooled std of post-burn-in neuron budgets across a point's seeds."""
    alpha, beta = _resolve_point(result, at)
    traces = [c.trace for c in result.point_cells(alpha, beta) if c.trace is not None]
    if not traces:
        raise ValueError(f"no successful runs at {(alpha, beta)}")
    ng, _, _ = _point_values(traces, result.burn_in)
    return float(ng.std())


def detect_transition(
    result: SweepResult, ratio_threshold: float = 2.0
) -> tuple[float, float] | None:
    """First axis interval where disorder jumps past the running minimum.

    Returns (lo, hi) axis values bracketing the first point whose disorder is
    at least ratio_threshold times the smallest disorder seen to its left
    (and strictly above it), or None when no such rise exists.
    """
    if ratio_threshold <= 1:
        raise ValueError("ratio_threshold must be > 1")
    spec = result.spec
    if len(spec.alphas) > 1 and len(spec.betas) > 1:
        raise ValueError("transition detection needs a single varying axis")
    if len(spec.alphas) > 1:
        axis = spec.alphas
        points = [(a, spec.betas[0]) for a in axis]
    else:
        axis = spec.betas
        points = [(spec.alphas[0], b) for b in axis]
    if len(axis) < 3:
        raise ValueError("need at least 3 axis points")
    if sorted(axis) != list(axis):
        raise ValueError("axis values must be sorted ascending")
    disorder = [disorder_statistic(result, p) for p in points]
    running_min = disorder[0]
    for i in range(1, len(disorder)):
        if disorder[i] > running_min and disorder[i] >= ratio_threshold * running_min:
            return (axis[i - 1], axis[i])
        running_min = min(running_min, disorder[i])
    return None


def save_long_csv(result: SweepResult, out) -> None:
    """Long CSV: alpha,beta,seed,t,NG,E,dead,flags (one row per trace step)."""
    close = False
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        out = open(out, "w", newline="")
        close = True
    try:
        out.write("alpha,beta,seed,t,NG,E,dead,flags\n")
        for cell in result.cells:
            if cell.trace is None:
                continue
            prefix = f"{repr(float(cell.alpha))},{repr(float(cell.beta))},{cell.seed_index}"
            for r in cell.trace.records:
                out.write(
                    f"{prefix},{r.t},{r.n_budget},{repr(float(r.error))},"
                    f"{r.dead_neurons},{';'.join(r.flags)}\n"
                )
    finally:
        if close:
            out.close()


def save_aggregate_csv(result: SweepResult, out) -> None:
    """Aggregate CSV: alpha,beta,mean_NG,std_NG,mean_E,std_E."""
    close = False
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        out = open(out, "w", newline="")
        close = True
    try:
        out.write("alpha,beta,mean_NG,std_NG,mean_E,std_E\n")
        for alpha in result.spec.alphas:
            for beta in result.spec.betas:
                s = result.stats[(alpha, beta)]
                out.write(
                    f"{repr(float(alpha))},{repr(float(beta))},"
                    f"{repr(s.mean_ng)},{repr(s.std_ng)},"
                    f"{repr(s.mean_e)},{repr(s.std_e)}\n"
                )
    finally:
        if close:
            out.close()


def verify_sweep_csvs(long_path, agg_path, burn_in: int) -> None:
    """Re-derive the aggregate CSV from the long CSV; raise on any mismatch."""
    groups: dict[tuple[float, float], dict[str, list[float]]] = {}
    with open(long_path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header[:6] != ["alpha", "beta", "seed", "t", "NG", "E"]:
            raise ValueError("unexpected long CSV header")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            key = (float(cells[0]), float(cells[1]))
            g = groups.setdefault(key, {"t": [], "ng": [], "e": []})
            g["t"].append(int(cells[3]))
            g["ng"].append(float(cells[4]))
            g["e"].append(float(cells[5]))
    with open(agg_path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header != ["alpha", "beta", "mean_NG", "std_NG", "mean_E", "std_E"]:
            raise ValueError("unexpected aggregate CSV header")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            key = (float(cells[0]), float(cells[1]))
            stored = [float(v) for v in cells[2:6]]
            if key not in groups:
                if all(np.isnan(stored)):
                    continue  # point whose every cell errored
                raise ValueError(f"aggregate row {key} has no trace rows")
            g = groups[key]
            keep = [i for i, t in enumerate(g["t"]) if t >= burn_in]
            ng = np.array([g["ng"][i] for i in keep])
            e = np.array([g["e"][i] for i in keep])
            fresh = [
                float(ng.mean()),
                float(ng.std()),
                float(e.mean()),
                float(e.std()),
            ]
            if fresh != stored:
                raise ValueError(
                    f"aggregates at {key} do not match the traces: "
                    f"{stored} != {fresh}"
                )
