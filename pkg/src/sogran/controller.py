"""Close-open feedback loop coupling the SOM layer to a second granulation
layer (TSK fuzzy model or rough-set rules).

Each step trains a fresh SOM on the training data, hands the codebook
granules to the second layer, measures that layer's error on the real test
data, and feeds the error into the linear neuron-budget recurrence

    n[t+1] = alpha * n[t] + beta * error[t] + gamma

clamped to [n_min, n_max]. The recurrence evolves the real-valued budget;
the integer grid size used at each step is its half-up rounding. Budgets
that have no acceptably square factorization (primes, mostly) are nudged to
the nearest factorable count, and the adjustment is flagged in the trace.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import DataTable
from .nfis import NfisTrainParams, TskModel, init_tsk, rmse, train_hybrid
from .rst import RuleSet, build_information_system, induce_rules, mse
from .som import (
    SomTrainParams,
    codebook_granules,
    dead_neuron_count,
    fit_discretizer,
    init_grid,
    train,
)

MODES = ("sonfis", "sorst")


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves toward +infinity."""
    return int(math.floor(x + 0.5))


@dataclass
class FeedbackState:
    """One point of the budget recurrence; ``n`` is the real-valued budget."""

    t: int
    n: float
    e: float
    alpha: float
    beta: float
    gamma: float
    n_min: int = 2
    n_max: int = 150

    def __post_init__(self):
        if self.n_min < 2 or self.n_max < self.n_min:
            raise ValueError("need 2 <= n_min <= n_max")
        for name in ("n", "e", "alpha", "beta", "gamma"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite {name}")
        if not (self.n_min <= self.n <= self.n_max):
            raise ValueError("budget out of bounds")

    def budget(self) -> int:
        """Integer grid budget at this step."""
        return min(max(round_half_up(self.n), self.n_min), self.n_max)


def next_neuron_count(state: FeedbackState) -> int:
    """Integer budget after one recurrence step, rounded half-up and clamped."""
    if not np.isfinite(state.e):
        raise ValueError("non-finite error")
    raw = state.alpha * state.n + state.beta * state.e + state.gamma
    return min(max(round_half_up(raw), state.n_min), state.n_max)


def advance(state: FeedbackState, error: float) -> FeedbackState:
    """Step the real-valued recurrence with a fresh error measurement."""
    if not np.isfinite(error):
        raise ValueError("non-finite error")
    raw = state.alpha * state.n + state.beta * error + state.gamma
    clamped = min(max(raw, float(state.n_min)), float(state.n_max))
    return replace(state, t=state.t + 1, n=clamped, e=error)


def _best_pair(n: int) -> tuple[int, int]:
    for a in range(int(math.isqrt(n)), 0, -1):
        if n % a == 0:
            return a, n // a
    return 1, n


def factor_grid(n: int, n_min: int = 2, n_max: int = 150) -> tuple[int, int]:
    """Most-square factorization of n, nudging to a nearby count if needed.

    Candidate counts are tried in the order n, n-1, n+1, n-2, n+2, ... within
    [n_min, n_max]; the first whose most-square factor pair keeps the aspect
    ratio within 3:1 wins. Returned with n1 <= n2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for offset in range(0, max(n_max - n, n - n_min) + 1):
        for candidate in ((n,) if offset == 0 else (n - offset, n + offset)):
            if not (n_min <= candidate <= n_max):
                continue
            n1, n2 = _best_pair(candidate)
            if n2 <= 3 * n1:
                return n1, n2
    raise ValueError(f"no factorable neuron count near {n} in [{n_min}, {n_max}]")


@dataclass
class RunConfig:
    """All knobs of one feedback run, flat so config files mirror CLI flags."""

    mode: str = "sonfis"
    steps: int = 30
    alpha: float = 0.9
    beta: float = 0.001
    gamma: float | None = None  # default 0.5 for sonfis, 1.0 for sorst
    n_rules: int = 2
    k: int = 3
    n0: int = 25
    n_min: int = 2
    n_max: int = 150
    som_epochs: int = 40
    som_lr0: float = 0.5
    som_lr_end: float = 0.01
    som_sigma0: float | None = None  # default: max(n1, n2) / 2 per step
    som_sigma_end: float = 0.5
    nfis_epochs: int = 10
    nfis_lr: float = 0.05
    firing_floor: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.n_rules < 1:
            raise ValueError("n_rules must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (2 <= self.n_min <= self.n0 <= self.n_max):
            raise ValueError("need 2 <= n_min <= n0 <= n_max")
        for name in ("alpha", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite {name}")
        if self.gamma is not None and not np.isfinite(self.gamma):
            raise ValueError("non-finite gamma")
        # delegate range checks to the layer parameter types
        SomTrainParams(
            epochs=self.som_epochs,
            lr0=self.som_lr0,
            lr_end=self.som_lr_end,
            sigma0=self.som_sigma0,
            sigma_end=self.som_sigma_end,
        )
        NfisTrainParams(
            epochs=self.nfis_epochs, lr=self.nfis_lr, firing_floor=self.firing_floor
        )

    @property
    def resolved_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return 1.0 if self.mode == "sorst" else 0.5


@dataclass
class StepRecord:
    t: int
    n_budget: int
    n_actual: int
    n1: int
    n2: int
    error: float
    dead_neurons: int
    flags: tuple[str, ...] = ()
    n_real: float = 0.0
    fit_error: float | None = None  # SONFIS: final granule-fit RMSE
    rule_count: int | None = None  # SORST: induced rule count


@dataclass
class RunTrace:
    mode: str
    records: list[StepRecord]
    config: RunConfig
    final_model: TskModel | RuleSet | None = None

    def to_csv(self, out) -> None:
        """Trace CSV: t,N_budget,N_actual,n1,n2,E,dead_neurons,flags."""
        close = False
        if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
            out = open(out, "w", newline="")
            close = True
        try:
            out.write("t,N_budget,N_actual,n1,n2,E,dead_neurons,flags\n")
            for r in self.records:
                out.write(
                    f"{r.t},{r.n_budget},{r.n_actual},{r.n1},{r.n2},"
                    f"{repr(float(r.error))},{r.dead_neurons},"
                    f"{';'.join(r.flags)}\n"
                )
        finally:
            if close:
                out.close()


def _step_seeds(master_seed: int, t: int) -> tuple[int, int, int]:
    """Stable per-step sub-seeds (SOM init, SOM shuffle, layer-2 init)."""
    children = np.random.SeedSequence([master_seed, 0, t]).spawn(3)
    return tuple(int(c.generate_state(1)[0]) for c in children)


def _setup_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, 1, index]).generate_state(1)[0])


def _train_som_step(config: RunConfig, train_table: DataTable, budget: int, t: int):
    """Fresh seeded SOM for one step; returns codebook + step bookkeeping."""
    n1, n2 = factor_grid(budget, config.n_min, config.n_max)
    actual = n1 * n2
    flags = ("budget_adjusted",) if actual != budget else ()
    init_seed, shuffle_seed, layer2_seed = _step_seeds(config.seed, t)
    codebook = init_grid(n1, n2, train_table, seed=init_seed)
    params = SomTrainParams(
        epochs=config.som_epochs,
        lr0=config.som_lr0,
        lr_end=config.som_lr_end,
        sigma0=config.som_sigma0,
        sigma_end=config.som_sigma_end,
        seed=shuffle_seed,
    )
    trained, _ = train(codebook, train_table, params)
    return trained, n1, n2, actual, flags, layer2_seed


def run_sonfis(config: RunConfig, train_table: DataTable, test: DataTable) -> RunTrace:
    """SOM + TSK feedback loop; the error fed back is the test-set RMSE."""
    if config.mode != "sonfis":
        raise ValueError("config.mode must be 'sonfis'")
    state = FeedbackState(
        t=0,
        n=float(config.n0),
        e=0.0,
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.resolved_gamma,
        n_min=config.n_min,
        n_max=config.n_max,
    )
    records = []
    model = None
    for t in range(config.steps):
        budget = state.budget()
        codebook, n1, n2, actual, flags, layer2_seed = _train_som_step(
            config, train_table, budget, t
        )
        granules = codebook_granules(codebook)
        if granules.n_rows < config.n_rules * (granules.c + 1):
            flags = flags + ("lse_least_norm",)
        model = init_tsk(
            config.n_rules, granules, seed=layer2_seed, firing_floor=config.firing_floor
        )
        params = NfisTrainParams(
            epochs=config.nfis_epochs,
            lr=config.nfis_lr,
            firing_floor=config.firing_floor,
            seed=layer2_seed,
        )
        model, history = train_hybrid(model, granules, params)
        error = rmse(model, test)
        records.append(
            StepRecord(
                t=t,
                n_budget=budget,
                n_actual=actual,
                n1=n1,
                n2=n2,
                error=error,
                dead_neurons=dead_neuron_count(codebook, train_table),
                flags=flags,
                n_real=state.n,
                fit_error=float(history[-1]),
            )
        )
        state = advance(state, error)
    return RunTrace(mode="sonfis", records=records, config=config, final_model=model)


def fit_table_discretizers(
    table: DataTable, k: int, master_seed: int
) -> list:
    """One 1-D SOM discretizer per column (conditions + decision)."""
    discretizers = []
    for j in range(table.c + 1):
        d = fit_discretizer(table.values[:, j], k=k, seed=_setup_seed(master_seed, j))
        d.attribute = j
        discretizers.append(d)
    return discretizers


def run_sorst(config: RunConfig, train_table: DataTable, test: DataTable) -> RunTrace:
    """SOM + rough-set feedback loop; the error fed back is the test MSE.

    Attribute discretizers are fitted once up front on the training table and
    reused for every step's granules and for the test system.
    """
    if config.mode != "sorst":
        raise ValueError("config.mode must be 'sorst'")
    discretizers = fit_table_discretizers(train_table, config.k, config.seed)
    test_system = build_information_system(test, discretizers)
    state = FeedbackState(
        t=0,
        n=float(config.n0),
        e=0.0,
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.resolved_gamma,
        n_min=config.n_min,
        n_max=config.n_max,
    )
    records = []
    rules = None
    for t in range(config.steps):
        budget = state.budget()
        codebook, n1, n2, actual, flags, _ = _train_som_step(
            config, train_table, budget, t
        )
        granules = codebook_granules(codebook)
        rules = induce_rules(build_information_system(granules, discretizers))
        error = mse(rules, test_system)
        records.append(
            StepRecord(
                t=t,
                n_budget=budget,
                n_actual=actual,
                n1=n1,
                n2=n2,
                error=error,
                dead_neurons=dead_neuron_count(codebook, train_table),
                flags=flags,
                n_real=state.n,
                rule_count=len(rules.rules),
            )
        )
        state = advance(state, error)
    return RunTrace(mode="sorst", records=records, config=config, final_model=rules)


def run(config: RunConfig, train_table: DataTable, test: DataTable) -> RunTrace:
    if config.mode == "sonfis":
        return run_sonfis(config, train_table, test)
    return run_sorst(config, train_table, test)
