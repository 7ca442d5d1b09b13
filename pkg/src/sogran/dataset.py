"""Numeric decision tables: CSV ingestion, splitting, scaling, synthesis.

Tables hold condition attributes plus exactly one decision attribute, with
the decision always stored in the last column.
"""

import csv
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data (bad CSV cells, missing columns...)."""


@dataclass
class DataTable:
    """A numeric table of ``c`` condition attributes + 1 decision attribute."""

    names: list[str]
    values: np.ndarray  # (n_rows, c + 1) float64, decision last

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("table values must be a 2-D array")
        if len(self.names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.names)} names for {self.values.shape[1]} columns"
            )
        if self.c < 1:
            raise DataError("need at least one condition attribute")
        if self.n_rows < 1:
            raise DataError("no data rows")
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise DataError(
                f"non-finite value at row {bad[0] + 1}, column '{self.names[bad[1]]}'"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def c(self) -> int:
        """Number of condition attributes."""
        return self.values.shape[1] - 1

    @property
    def conditions(self) -> np.ndarray:
        return self.values[:, :-1]

    @property
    def decisions(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def decision_name(self) -> str:
        return self.names[-1]


@dataclass
class SplitSpec:
    """Train/test split sizes, with an optional seeded shuffle before the cut."""

    n_train: int
    n_test: int
    shuffle_seed: int | None = None

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("split sizes must both be >= 1")


@dataclass
class MinMaxScaler:
    """Per-attribute affine map onto [0, 1]; constant attributes map to 0.5."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def spans(self) -> np.ndarray:
        return self.maxs - self.mins

    def transform_values(self, values: np.ndarray) -> np.ndarray:
        spans = self.spans
        safe = np.where(spans > 0, spans, 1.0)
        scaled = (values - self.mins) / safe
        return np.where(spans > 0, scaled, 0.5)

    def inverse_values(self, values: np.ndarray) -> np.ndarray:
        # Constant attributes are not invertible; they return their min.
        return np.where(self.spans > 0, self.mins + values * self.spans, self.mins)

    def transform(self, table: DataTable) -> DataTable:
        return DataTable(list(table.names), self.transform_values(table.values))


def load_table(path, decision_column: str) -> DataTable:
    """Read a headered CSV into a DataTable, moving the decision column last.

    Cells must all parse as finite numbers ('.' decimal point, comma
    separator). Errors name the offending cell by 1-based data row and
    column name.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open '{path}': {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"'{path}': empty file") from None
        if decision_column not in header:
            raise DataError(f"'{path}': no column named '{decision_column}'")
        rows = []
        for i, cells in enumerate(reader, start=1):
            if not cells or (len(cells) == 1 and not cells[0].strip()):
                continue
            if len(cells) != len(header):
                raise DataError(
                    f"'{path}': row {i} has {len(cells)} cells, expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, cells):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"'{path}': cannot parse cell at row {i}, column '{name}': {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise DataError(
                        f"'{path}': non-finite cell at row {i}, column '{name}': {cell!r}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DataError(f"'{path}': no data rows")
    values = np.array(rows, dtype=np.float64)
    d = header.index(decision_column)
    col_order = [j for j in range(len(header)) if j != d] + [d]
    return DataTable([header[j] for j in col_order], values[:, col_order])


def write_csv(table: DataTable, out) -> None:
    """Write a DataTable as headered CSV ('.' decimals, no quoting)."""
    close = False
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        out = open(out, "w", newline="")
        close = True
    try:
        out.write(",".join(table.names) + "\n")
        for row in table.values:
            out.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if close:
            out.close()


def split(table: DataTable, spec: SplitSpec) -> tuple[DataTable, DataTable]:
    """Cut a table into disjoint train/test subsets of the requested sizes."""
    total = spec.n_train + spec.n_test
    if total > table.n_rows:
        raise ValueError(
            f"split needs {total} rows but table has {table.n_rows}"
        )
    if spec.shuffle_seed is None:
        idx = np.arange(table.n_rows)
    else:
        idx = np.random.default_rng(spec.shuffle_seed).permutation(table.n_rows)
    train_idx = idx[: spec.n_train]
    test_idx = idx[spec.n_train : total]
    return (
        DataTable(list(table.names), table.values[train_idx]),
        DataTable(list(table.names), table.values[test_idx]),
    )


def normalize(table: DataTable) -> tuple[DataTable, MinMaxScaler]:
    """Scale every attribute onto [0, 1]; returns the fitted scaler too."""
    scaler = MinMaxScaler(
        mins=table.values.min(axis=0), maxs=table.values.max(axis=0)
    )
    return scaler.transform(table), scaler


# Surrogate response surface: two Gaussian bumps on the unit cube plus a
# linear ramp, so the decision is smooth, nonlinear and bounded.
_BUMP1_CENTER = 0.25
_BUMP1_WIDTH = 0.15
_BUMP2_CENTER = 0.75
_BUMP2_WIDTH = 0.20


def synthetic_response(conditions: np.ndarray) -> np.ndarray:
    """Noise-free decision surface used by gen_synthetic."""
    d1 = ((conditions - _BUMP1_CENTER) ** 2).sum(axis=1)
    d2 = ((conditions - _BUMP2_CENTER) ** 2).sum(axis=1)
    return (
        0.8 * np.exp(-d1 / (2.0 * _BUMP1_WIDTH**2))
        + 0.6 * np.exp(-d2 / (2.0 * _BUMP2_WIDTH**2))
        + 0.3 * conditions.mean(axis=1)
    )


def gen_synthetic(
    n_rows: int, c: int = 3, noise_sd: float = 0.0, seed: int = 0
) -> DataTable:
    """Generate a synthetic decision table with conditions uniform in [0,1]^c.

    The decision is synthetic_response(x) plus Gaussian noise of the given
    standard deviation; fully deterministic per seed.
    """
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    if c < 1:
        raise ValueError("c must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n_rows, c))
    y = synthetic_response(x)
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n_rows)
    names = [f"x{i + 1}" for i in range(c)] + ["y"]
    return DataTable(names, np.column_stack([x, y]))
