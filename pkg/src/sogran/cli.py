"""Command-line front end.

Subcommands: gen-data, run, sweep, rules, chart. Every option may also come
from a flat ``key = value`` config file (keys named exactly like the flags,
without the leading dashes); explicit flags override file values. Exit codes:
0 success, 1 usage error, 2 data error. Diagnostics go to stderr, data to
files or stdout.
"""

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import chart as chart_mod
from . import sweep as sweep_mod
from .controller import RunConfig, fit_table_discretizers, run
from .dataset import (
    DataError,
    DataTable,
    SplitSpec,
    gen_synthetic,
    load_table,
    normalize,
    split,
    write_csv,
)
from .nfis import format_tsk
from .rst import build_information_system, format_rules, format_rules_csv, induce_rules


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class _Opt:
    name: str  # flag name with dashes, e.g. "noise-sd"
    type: type
    default: object
    help: str
    choices: tuple | None = None

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_DATA_OPTS = [
    _Opt("data", str, None, "input CSV (default: generate a synthetic table)"),
    _Opt("decision", str, None, "decision column name (default: last column)"),
    _Opt("rows", int, 693, "synthetic rows when no --data is given"),
    _Opt("cond", int, 3, "synthetic condition attribute count"),
    _Opt("noise-sd", float, 0.05, "synthetic decision noise std deviation"),
    _Opt("data-seed", int, 0, "synthetic data seed"),
    _Opt("train-rows", int, 600, "training rows"),
    _Opt("test-rows", int, 93, "test rows"),
    _Opt("split-seed", int, None, "shuffle seed before the split (default: none)"),
]

_RUN_OPTS = [
    _Opt("mode", str, "sonfis", "feedback mode", choices=("sonfis", "sorst")),
    _Opt("steps", int, 30, "close-open iterations"),
    _Opt("alpha", float, 0.9, "budget carry-over coefficient"),
    _Opt("beta", float, 0.001, "error feedback coefficient"),
    _Opt("gamma", float, None, "constant drive (default: 0.5 sonfis, 1.0 sorst)"),
    _Opt("rules", int, 2, "fuzzy rule count (sonfis)"),
    _Opt("k", int, 3, "discretization class count (sorst)"),
    _Opt("n0", int, 25, "initial neuron budget"),
    _Opt("n-min", int, 2, "minimum neuron budget"),
    _Opt("n-max", int, 150, "maximum neuron budget"),
    _Opt("som-epochs", int, 40, "SOM training epochs per step"),
    _Opt("som-lr0", float, 0.5, "SOM initial learning rate"),
    _Opt("som-lr-end", float, 0.01, "SOM final learning rate"),
    _Opt("som-sigma0", float, None, "SOM initial radius (default: max(n1,n2)/2)"),
    _Opt("som-sigma-end", float, 0.5, "SOM final neighborhood radius"),
    _Opt("nfis-epochs", int, 10, "hybrid training epochs (sonfis)"),
    _Opt("nfis-lr", float, 0.05, "premise learning rate (sonfis)"),
    _Opt("firing-floor", float, 1e-12, "uniform-weight fallback threshold (sonfis)"),
    _Opt("seed", int, 0, "master run seed"),
]


def _opts_for(command: str) -> list[_Opt]:
    if command == "gen-data":
        return [
            _Opt("rows", int, 693, "row count"),
            _Opt("cond", int, 3, "condition attribute count"),
            _Opt("noise-sd", float, 0.05, "decision noise std deviation"),
            _Opt("seed", int, 0, "generator seed"),
            _Opt("out", str, None, "output CSV path (default: stdout)"),
        ]
    if command == "run":
        return (
            _DATA_OPTS
            + _RUN_OPTS
            + [
                _Opt("out", str, None, "trace CSV path (default: stdout)"),
                _Opt("dump-model", str, None, "write the final model/rules here"),
            ]
        )
    if command == "sweep":
        run_opts = []
        for opt in _RUN_OPTS:
            if opt.name in ("alpha", "beta"):
                run_opts.append(
                    _Opt(
                        opt.name,
                        str,
                        "0.9" if opt.name == "alpha" else "0.001",
                        f"{opt.name} value(s): scalar, 'a,b,c' or 'start:stop:step'",
                    )
                )
            else:
                run_opts.append(opt)
        return (
            _DATA_OPTS
            + run_opts
            + [
                _Opt("seeds", int, 1, "seeds per sweep point"),
                _Opt("burn-in", int, None, "steps discarded from statistics"),
                _Opt("threshold", float, 2.0, "transition detection ratio"),
                _Opt("workers", int, 0, "parallel workers (0 = all cores)"),
                _Opt("out-long", str, "sweep_long.csv", "long CSV path"),
                _Opt("out-agg", str, "sweep_agg.csv", "aggregate CSV path"),
            ]
        )
    if command == "rules":
        return [
            _Opt("data", str, None, "input CSV (required)"),
            _Opt("decision", str, None, "decision column name (default: last)"),
            _Opt("k", int, 3, "discretization class count"),
            _Opt("seed", int, 0, "discretizer seed"),
            _Opt("csv", str, "no", "emit CSV instead of text (yes/no)"),
            _Opt("out", str, None, "output path (default: stdout)"),
        ]
    if command == "chart":
        return [
            _Opt("agg", str, None, "aggregate CSV from a sweep (required)"),
            _Opt("axis", str, None, "x axis", choices=("alpha", "beta")),
            _Opt("out", str, None, "output SVG path (default: stdout)"),
        ]
    raise ValueError(command)


_COMMANDS = ("gen-data", "run", "sweep", "rules", "chart")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sogran", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for command in _COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="flat key = value config file")
        for opt in _opts_for(command):
            kwargs = dict(
                # SUPPRESS so only explicitly-given flags land in the namespace
                default=argparse.SUPPRESS,
                help=opt.help,
                dest=opt.dest,
                type=opt.type,
            )
            if opt.choices is not None:
                kwargs["choices"] = opt.choices
            p.add_argument(f"--{opt.name}", **kwargs)
    return parser


def _read_config_file(path: str, opts: list[_Opt]) -> dict:
    by_name = {o.name: o for o in opts}
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file '{path}': {exc.strerror}")
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in by_name:
            raise UsageError(f"{path}:{lineno}: unknown key '{key}'")
        opt = by_name[key]
        try:
            value = opt.type(raw)
        except ValueError:
            raise UsageError(
                f"{path}:{lineno}: cannot parse '{key}' value {raw!r} as {opt.type.__name__}"
            )
        if opt.choices is not None and value not in opt.choices:
            raise UsageError(
                f"{path}:{lineno}: '{key}' must be one of {opt.choices}"
            )
        values[opt.dest] = value
    return values


def _merge_options(ns: argparse.Namespace, opts: list[_Opt]) -> dict:
    merged = {o.dest: o.default for o in opts}
    if ns.config is not None:
        merged.update(_read_config_file(ns.config, opts))
    for opt in opts:
        if hasattr(ns, opt.dest):
            merged[opt.dest] = getattr(ns, opt.dest)
    return merged


def parse_axis(text: str) -> list[float]:
    """Parse 'a,b,c' or 'start:stop:step' (inclusive stop) into floats."""
    text = text.strip()
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) != 3:
            raise UsageError(f"axis range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in pieces)
        if step <= 0 or stop < start:
            raise UsageError(f"bad axis range {text!r}")
        count = int((stop - start) / step + 1e-9) + 1
        return [round(start + i * step, 10) for i in range(count)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse axis values {text!r}")


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _default_decision(path: str) -> str:
    """Peek at a CSV header and use its last column as the decision."""
    try:
        with open(path) as fh:
            return fh.readline().strip().split(",")[-1].strip()
    except OSError as exc:
        raise DataError(f"cannot open '{path}': {exc.strerror}")


def _load_or_generate(o: dict) -> DataTable:
    if o["data"] is not None:
        decision = o["decision"] or _default_decision(o["data"])
        return load_table(o["data"], decision)
    return gen_synthetic(o["rows"], o["cond"], o["noise_sd"], o["data_seed"])


def _prepare_split(o: dict) -> tuple[DataTable, DataTable]:
    table = _load_or_generate(o)
    spec = SplitSpec(o["train_rows"], o["test_rows"], o["split_seed"])
    try:
        train_table, test_table = split(table, spec)
    except ValueError as exc:
        raise UsageError(str(exc))
    train_norm, scaler = normalize(train_table)
    return train_norm, scaler.transform(test_table)


def _run_config(o: dict, mode: str, alpha=None, beta=None, seed=None) -> RunConfig:
    try:
        return RunConfig(
            mode=mode,
            steps=o["steps"],
            alpha=o["alpha"] if alpha is None else alpha,
            beta=o["beta"] if beta is None else beta,
            gamma=o["gamma"],
            n_rules=o["rules"],
            k=o["k"],
            n0=o["n0"],
            n_min=o["n_min"],
            n_max=o["n_max"],
            som_epochs=o["som_epochs"],
            som_lr0=o["som_lr0"],
            som_lr_end=o["som_lr_end"],
            som_sigma0=o["som_sigma0"],
            som_sigma_end=o["som_sigma_end"],
            nfis_epochs=o["nfis_epochs"],
            nfis_lr=o["nfis_lr"],
            firing_floor=o["firing_floor"],
            seed=o["seed"] if seed is None else seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _cmd_gen_data(o: dict) -> int:
    try:
        table = gen_synthetic(o["rows"], o["cond"], o["noise_sd"], o["seed"])
    except ValueError as exc:
        raise UsageError(str(exc))
    if o["out"] is None:
        write_csv(table, sys.stdout)
    else:
        write_csv(table, o["out"])
    return 0


def _cmd_run(o: dict) -> int:
    config = _run_config(o, o["mode"])
    train_table, test_table = _prepare_split(o)
    trace = run(config, train_table, test_table)
    if o["out"] is None:
        trace.to_csv(sys.stdout)
    else:
        trace.to_csv(o["out"])
    if o["dump_model"] is not None:
        if trace.mode == "sonfis":
            _write_text(format_tsk(trace.final_model, train_table.names), o["dump_model"])
        else:
            _write_text(format_rules(trace.final_model), o["dump_model"])
    return 0


def _cmd_sweep(o: dict) -> int:
    alphas = parse_axis(o["alpha"])
    betas = parse_axis(o["beta"])
    if not alphas or not betas:
        raise UsageError("alpha and beta need at least one value each")
    base = _run_config(o, o["mode"], alpha=alphas[0], beta=betas[0])
    try:
        spec = sweep_mod.SweepSpec(
            base=base,
            alphas=alphas,
            betas=betas,
            n_seeds=o["seeds"],
            burn_in=o["burn_in"],
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    if o["threshold"] <= 1:
        raise UsageError("threshold must be > 1")
    workers = o["workers"] if o["workers"] > 0 else (os.cpu_count() or 1)
    train_table, test_table = _prepare_split(o)
    result = sweep_mod.run_sweep(spec, train_table, test_table, workers=workers)
    sweep_mod.save_long_csv(result, o["out_long"])
    sweep_mod.save_aggregate_csv(result, o["out_agg"])
    for cell in result.cells:
        if cell.error is not None:
            print(
                f"cell alpha={cell.alpha} beta={cell.beta} seed={cell.seed_index} "
                f"failed: {cell.error}",
                file=sys.stderr,
            )
    single_axis = len(spec.alphas) == 1 or len(spec.betas) == 1
    if single_axis:
        axis = spec.alphas if len(spec.alphas) > 1 else spec.betas
        name = "alpha" if len(spec.alphas) > 1 else "beta"
        print(f"disorder statistic (pooled post-burn-in NG std) by {name}:", file=sys.stderr)
        for v in axis:
            try:
                d = sweep_mod.disorder_statistic(result, v)
                print(f"  {name}={v:g}: {d:.6g}", file=sys.stderr)
            except ValueError as exc:
                print(f"  {name}={v:g}: {exc}", file=sys.stderr)
        if len(axis) >= 3:
            interval = sweep_mod.detect_transition(result, o["threshold"])
            if interval is None:
                print(
                    f"no disorder rise >= {o['threshold']}x detected "
                    "(heuristic readout, threshold-dependent)",
                    file=sys.stderr,
                )
            else:
                print(
                    f"disorder first rises >= {o['threshold']}x across "
                    f"{name} in [{interval[0]:g}, {interval[1]:g}] "
                    "(heuristic readout, threshold-dependent)",
                    file=sys.stderr,
                )
    return 0


def _cmd_rules(o: dict) -> int:
    if o["data"] is None:
        raise UsageError("rules requires --data")
    decision = o["decision"] or _default_decision(o["data"])
    table = load_table(o["data"], decision)
    normalized, _ = normalize(table)
    try:
        discretizers = fit_table_discretizers(normalized, o["k"], o["seed"])
    except ValueError as exc:
        raise DataError(str(exc))
    rules = induce_rules(build_information_system(normalized, discretizers))
    text = format_rules_csv(rules) if _parse_bool(o["csv"]) else format_rules(rules)
    _write_text(text, o["out"])
    return 0


def _cmd_chart(o: dict) -> int:
    if o["agg"] is None:
        raise UsageError("chart requires --agg")
    try:
        fh = open(o["agg"], newline="")
    except OSError as exc:
        raise DataError(f"cannot open '{o['agg']}': {exc.strerror}")
    with fh:
        header = fh.readline().strip().split(",")
        expected = ["alpha", "beta", "mean_NG", "std_NG", "mean_E", "std_E"]
        if header != expected:
            raise DataError(f"'{o['agg']}': expected header {','.join(expected)}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            cells = line.rstrip("\n").split(",")
            try:
                rows.append({k: float(v) for k, v in zip(header, cells)})
            except ValueError:
                raise DataError(f"'{o['agg']}': bad row at line {lineno}")
    kept = [r for r in rows if all(np.isfinite(v) for v in r.values())]
    if len(kept) < len(rows):
        print(
            f"chart: skipping {len(rows) - len(kept)} row(s) with non-finite "
            "aggregates (errored sweep points)",
            file=sys.stderr,
        )
    rows = kept
    if not rows:
        raise DataError(f"'{o['agg']}': no data rows")
    axis = o["axis"]
    if axis is None:
        alphas = {r["alpha"] for r in rows}
        betas = {r["beta"] for r in rows}
        axis = "alpha" if len(alphas) > 1 or len(betas) == 1 else "beta"
    off_axis = "beta" if axis == "alpha" else "alpha"
    if len({r[off_axis] for r in rows}) > 1:
        raise UsageError(
            "aggregate varies along both axes; chart needs a single-axis sweep"
        )
    rows.sort(key=lambda r: r[axis])
    _write_text(chart_mod.render_chart(rows, axis), o["out"])
    return 0


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "rules": _cmd_rules,
    "chart": _cmd_chart,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("missing subcommand (gen-data, run, sweep, rules, chart)")
        options = _merge_options(ns, _opts_for(ns.command))
        return _HANDLERS[ns.command](options)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
