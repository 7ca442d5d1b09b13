import re
import subprocess
import sys

import numpy as np
import pytest

from sogran.cli import main, parse_axis


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "table.csv"
    assert run_cli("gen-data", "--rows", "160", "--cond", "3", "--noise-sd", "0.05",
                   "--seed", "3", "--out", str(path)) == 0
    return path


class TestGenData:
    def test_writes_parseable_csv(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run_cli("gen-data", "--rows", "20", "--cond", "2", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x1,x2,y"
        assert len(lines) == 21
        for line in lines[1:]:
            assert len([float(v) for v in line.split(",")]) == 3

    def test_byte_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run_cli("gen-data", "--rows", "30", "--seed", "9", "--out", str(out)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_stdout_default(self, capsys):
        assert run_cli("gen-data", "--rows", "3", "--cond", "1") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "x1,y"
        assert len(lines) == 4

    def test_bad_rows_is_usage_error(self, capsys):
        assert run_cli("gen-data", "--rows", "0") == 1
        assert "error" in capsys.readouterr().err


class TestRun:
    def _run_args(self, data_csv, out, extra=()):
        return (
            "run", "--mode", "sonfis", "--data", str(data_csv),
            "--train-rows", "120", "--test-rows", "40",
            "--steps", "3", "--som-epochs", "8", "--nfis-epochs", "2",
            "--n0", "10", "--seed", "4", "--out", str(out), *extra,
        )

    def test_trace_has_step_rows(self, data_csv, tmp_path):
        out = tmp_path / "trace.csv"
        assert run_cli(*self._run_args(data_csv, out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,N_budget,N_actual,n1,n2,E,dead_neurons,flags"
        assert len(lines) == 4

    def test_zero_steps_usage_error(self, data_csv, tmp_path, capsys):
        code = run_cli("run", "--mode", "sonfis", "--data", str(data_csv), "--steps", "0")
        assert code == 1
        assert "steps" in capsys.readouterr().err

    def test_missing_data_file_exit_2(self, tmp_path, capsys):
        code = run_cli("run", "--mode", "sonfis", "--data", str(tmp_path / "nope.csv"))
        assert code == 2
        assert "cannot open" in capsys.readouterr().err

    def test_identical_invocations_identical_bytes(self, data_csv, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(*self._run_args(data_csv, a)) == 0
        assert run_cli(*self._run_args(data_csv, b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sorst_mode_with_model_dump(self, data_csv, tmp_path):
        out = tmp_path / "trace.csv"
        dump = tmp_path / "rules.txt"
        code = run_cli(
            "run", "--mode", "sorst", "--data", str(data_csv),
            "--train-rows", "120", "--test-rows", "40",
            "--steps", "2", "--som-epochs", "8", "--n0", "10",
            "--out", str(out), "--dump-model", str(dump),
        )
        assert code == 0
        assert "=>" in dump.read_text()

    def test_synthetic_fallback_without_data(self, tmp_path):
        out = tmp_path / "trace.csv"
        code = run_cli(
            "run", "--mode", "sonfis", "--rows", "160", "--train-rows", "120",
            "--test-rows", "40", "--steps", "2", "--som-epochs", "8",
            "--nfis-epochs", "1", "--n0", "9", "--out", str(out),
        )
        assert code == 0
        assert len(out.read_text().splitlines()) == 3


class TestConfigFile:
    def test_config_equals_flags(self, data_csv, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            "\n".join(
                [
                    "mode = sonfis",
                    f"data = {data_csv}",
                    "train-rows = 120",
                    "test-rows = 40",
                    "steps = 3",
                    "som-epochs = 8",
                    "nfis-epochs = 2",
                    "n0 = 10",
                    "seed = 4  # flags and file must agree",
                ]
            )
        )
        via_flags = tmp_path / "flags.csv"
        via_file = tmp_path / "file.csv"
        assert run_cli(
            "run", "--mode", "sonfis", "--data", str(data_csv),
            "--train-rows", "120", "--test-rows", "40", "--steps", "3",
            "--som-epochs", "8", "--nfis-epochs", "2", "--n0", "10",
            "--seed", "4", "--out", str(via_flags),
        ) == 0
        assert run_cli("run", "--config", str(config), "--out", str(via_file)) == 0
        assert via_flags.read_bytes() == via_file.read_bytes()

    def test_flag_overrides_file(self, data_csv, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(f"data = {data_csv}\ntrain-rows = 120\ntest-rows = 40\n"
                          "steps = 1\nsom-epochs = 8\nnfis-epochs = 1\nn0 = 9\n")
        out = tmp_path / "t.csv"
        assert run_cli("run", "--config", str(config), "--steps", "2",
                       "--out", str(out)) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_unknown_key_rejected(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("stepz = 3\n")
        assert run_cli("run", "--config", str(config)) == 1
        assert "unknown key 'stepz'" in capsys.readouterr().err

    def test_unparseable_value_rejected(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("steps = many\n")
        assert run_cli("run", "--config", str(config)) == 1
        assert "steps" in capsys.readouterr().err


class TestParseAxis:
    def test_range(self):
        assert parse_axis("0.6:0.8:0.1") == [0.6, 0.7, 0.8]

    def test_range_inclusive_end(self):
        values = parse_axis("0.60:1.10:0.05")
        assert len(values) == 11
        assert values[0] == 0.6 and values[-1] == 1.1

    def test_list(self):
        assert parse_axis("0.7,0.9") == [0.7, 0.9]

    def test_bad_range(self):
        from sogran.cli import UsageError

        with pytest.raises(UsageError):
            parse_axis("1:0:0.1")


class TestSweepAndChart:
    def test_sweep_then_chart(self, data_csv, tmp_path, capsys):
        long_path = tmp_path / "long.csv"
        agg_path = tmp_path / "agg.csv"
        code = run_cli(
            "sweep", "--data", str(data_csv), "--train-rows", "120",
            "--test-rows", "40", "--steps", "4", "--som-epochs", "8",
            "--nfis-epochs", "1", "--n0", "10",
            "--alpha", "0.7,0.9,1.1", "--seeds", "2", "--workers", "1",
            "--out-long", str(long_path), "--out-agg", str(agg_path),
        )
        err = capsys.readouterr().err
        assert code == 0
        assert "disorder statistic" in err
        from sogran.sweep import verify_sweep_csvs

        verify_sweep_csvs(long_path, agg_path, 1)

        svg_path = tmp_path / "chart.svg"
        assert run_cli("chart", "--agg", str(agg_path), "--out", str(svg_path)) == 0
        svg = svg_path.read_text()
        assert svg.startswith("<svg")
        assert "http" not in svg.replace("http://www.w3.org/2000/svg", "")

        # every plotted point equals an aggregate CSV row
        agg_rows = {}
        lines = agg_path.read_text().splitlines()
        for line in lines[1:]:
            cells = line.split(",")
            agg_rows[float(cells[0])] = (float(cells[2]), float(cells[4]))
        points = re.findall(
            r'<circle[^>]*data-series="(\w+)"[^>]*data-x="([^"]+)"[^>]*data-y="([^"]+)"',
            svg,
        )
        assert len(points) == 6  # 3 alphas x 2 series
        for series, x, y in points:
            x, y = float(x), float(y)
            assert x in agg_rows
            expect = agg_rows[x][0] if series == "ng" else agg_rows[x][1]
            assert y == expect

    def test_chart_skips_nan_rows(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        agg.write_text(
            "alpha,beta,mean_NG,std_NG,mean_E,std_E\n"
            "0.8,0.001,5.0,1.0,0.2,0.01\n"
            "0.9,0.001,nan,nan,nan,nan\n"
            "1.0,0.001,7.0,1.0,0.2,0.01\n"
        )
        out = tmp_path / "c.svg"
        assert run_cli("chart", "--agg", str(agg), "--out", str(out)) == 0
        assert "skipping 1 row" in capsys.readouterr().err
        assert out.read_text().count('data-series="ng"') == 2

    def test_chart_rejects_grid(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        agg.write_text(
            "alpha,beta,mean_NG,std_NG,mean_E,std_E\n"
            "0.8,0.001,5.0,1.0,0.2,0.01\n"
            "0.8,0.01,6.0,1.0,0.2,0.01\n"
            "0.9,0.001,7.0,1.0,0.2,0.01\n"
        )
        assert run_cli("chart", "--agg", str(agg)) == 1
        assert "single-axis" in capsys.readouterr().err

    def test_chart_missing_file_exit_2(self, tmp_path):
        assert run_cli("chart", "--agg", str(tmp_path / "nope.csv")) == 2


class TestRules:
    def test_prints_rules(self, data_csv, capsys):
        assert run_cli("rules", "--data", str(data_csv), "--k", "3") == 0
        out = capsys.readouterr().out
        assert "=>" in out
        assert "support=" in out

    def test_requires_data(self, capsys):
        assert run_cli("rules") == 1
        assert "--data" in capsys.readouterr().err

    def test_csv_variant(self, data_csv, capsys):
        assert run_cli("rules", "--data", str(data_csv), "--csv", "yes") == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "descriptors,decision,support"


class TestTopLevel:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert run_cli() == 1
        assert "subcommand" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run_cli("run", "--bogus", "1") == 1

    def test_console_entry_point_runs(self):
        out = subprocess.run(
            [sys.executable, "-m", "sogran.cli", "gen-data", "--rows", "2", "--cond", "1"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        assert out.stdout.splitlines()[0] == "x1,y"

    def test_identical_traces_across_processes(self, data_csv):
        # fresh interpreters (fresh hash randomization) must agree byte-for-byte
        argv = [
            sys.executable, "-m", "sogran.cli", "run", "--mode", "sorst",
            "--data", str(data_csv), "--train-rows", "120", "--test-rows", "40",
            "--steps", "2", "--som-epochs", "8", "--n0", "10", "--seed", "6",
        ]
        runs = [
            subprocess.run(argv, capture_output=True, text=True) for _ in range(2)
        ]
        assert all(r.returncode == 0 for r in runs)
        assert runs[0].stdout == runs[1].stdout
        assert runs[0].stdout.count("\n") == 3
