"""sogran: self-organizing granulation.

A SOM layer compresses numeric decision tables into crisp granules; a second
layer (a TSK fuzzy model or induced rough-set rules) learns from the granules
and is scored against held-out data; the score drives the SOM's neuron budget
through a linear feedback recurrence. Sweeping the recurrence coefficients
exposes an order/disorder transition in the budget trajectories.
"""

from ._kernels import BACKEND
from .controller import (
    FeedbackState,
    RunConfig,
    RunTrace,
    StepRecord,
    advance,
    factor_grid,
    next_neuron_count,
    run,
    run_sonfis,
    run_sorst,
)
from .dataset import (
    DataError,
    DataTable,
    MinMaxScaler,
    SplitSpec,
    gen_synthetic,
    load_table,
    normalize,
    split,
    write_csv,
)
from .nfis import (
    NfisTrainParams,
    TskModel,
    eval_batch,
    eval_tsk,
    fit_consequents_lse,
    init_tsk,
    rmse,
    root_mean_square_error,
    train_hybrid,
)
from .rst import (
    DiscernibilityMatrix,
    InformationSystem,
    Rule,
    RuleSet,
    build_information_system,
    classify,
    discernibility_function,
    discernibility_matrix,
    greedy_cover,
    indiscernibility,
    induce_rules,
    lower_upper,
    mean_square_error,
    mse,
    prime_implicants,
)
from .som import (
    Discretizer1D,
    SomCodebook,
    SomTrainParams,
    bmu,
    codebook_granules,
    dead_neuron_count,
    fit_discretizer,
    init_grid,
    quantization_error,
    train,
)
from .sweep import (
    SweepResult,
    SweepSpec,
    detect_transition,
    disorder_statistic,
    run_sweep,
    save_aggregate_csv,
    save_long_csv,
    verify,
    verify_sweep_csvs,
)

__version__ = "0.1.0"
