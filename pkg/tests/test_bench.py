import csv
import json
import math

import numpy as np
import pytest

from quadpinn import bench
from quadpinn.bench import (
    COLUMNS,
    OUT_DIR_ENV,
    BenchConfig,
    BenchError,
    UnknownSuite,
    config_from_row,
    format_real,
    quad_compare,
    read_report,
    run_suites,
    select_suites,
    sweep,
    write_report,
)
from quadpinn.cli import main
from quadpinn.problems import suite_ids


def strip_wall_time(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r.pop("wall_time_ms")
    return rows


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
    return tmp_path


class TestConfig:
    def test_defaults_are_valid(self):
        cfg = BenchConfig(suite="t3r1")
        assert cfg.seed == 42

    @pytest.mark.parametrize("kwargs", [
        {"n_train": 1},
        {"adam_epochs": 0, "lbfgs_epochs": 0},
        {"hidden": (10, 0)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(BenchError):
            BenchConfig(suite="t3r1", **kwargs)

    def test_select_globs(self):
        assert select_suites(["t3r1"]) == ["t3r1"]
        assert select_suites(["ex*"]) == ["ex1", "ex2", "ex3", "ex4"]
        assert select_suites(["ex1", "ex*"]) == ["ex1", "ex2", "ex3", "ex4"]

    def test_unknown_suite_lists_ids(self):
        with pytest.raises(UnknownSuite) as info:
            select_suites(["nosuch"])
        assert "t3r1" in str(info.value) and "oc-ex1" in str(info.value)

    def test_format_real(self):
        assert format_real(0.1) == "0.10000000000000001"
        assert float(format_real(math.pi)) == math.pi


class TestQuadCompare:
    def test_exp_n16(self):
        (row,) = quad_compare("exp", 0.0, 1.0, [16], seed=0)
        assert row["exact"] == pytest.approx(math.e - 1, rel=1e-15)
        assert row["gauss_error"] < 1e-13
        assert 1e-5 < row["trapezoid_error"] < 1e-3
        assert row["gauss_error"] < row["trapezoid_error"] < 1.0
        assert row["gauss_error"] < row["mc_error"]

    def test_constant_is_exact_everywhere(self):
        for row in quad_compare("const", -1.0, 2.0, [2, 5, 16], seed=3):
            assert max(row["gauss_error"], row["trapezoid_error"], row["mc_error"]) < 1e-14

    def test_monte_carlo_reproducible(self):
        a = [r["mc_error"] for r in quad_compare("sin", 0.0, 2.0, [8, 64], seed=5)]
        b = [r["mc_error"] for r in quad_compare("sin", 0.0, 2.0, [8, 64], seed=5)]
        c = [r["mc_error"] for r in quad_compare("sin", 0.0, 2.0, [8, 64], seed=6)]
        assert a == b and a != c

    def test_gauss_beats_trapezoid_on_runge(self):
        rows = quad_compare("runge", -1.0, 1.0, [32, 64], seed=0)
        assert all(r["gauss_error"] < r["trapezoid_error"] for r in rows)

    def test_unknown_function(self):
        with pytest.raises(BenchError):
            quad_compare("tan", 0.0, 1.0, [4])

    def test_cli_unknown_function_exit_code(self, out_dir):
        assert main(["quad-compare", "--function", "tan"]) == 1


class TestReports:
    def rows(self):
        return run_suites(["t3r1", "oc-ex1"], n_train=8, lbfgs_epochs=2)

    def test_csv_round_trip(self, tmp_path):
        rows = self.rows()
        path = write_report(rows, tmp_path / "r.csv")
        back = read_report(path)
        assert len(back) == 2
        for orig, parsed in zip(rows, back):
            for col in COLUMNS:
                assert parsed[col] == orig[col] or (orig[col] in (None, {}) and parsed[col] in (None, {})), col

    def test_config_from_row_reproduces_run(self, tmp_path):
        rows = self.rows()
        back = read_report(write_report(rows, tmp_path / "r.csv"))
        for row in back:
            again = bench._run_one(config_from_row(row))
            assert again["final_loss"] == row["final_loss"] and again["mae"] == row["mae"]

    def test_json_mirrors_csv(self, tmp_path):
        rows = self.rows()
        c = read_report(write_report(rows, tmp_path / "r.csv"))
        j = read_report(write_report(rows, tmp_path / "r.json"))
        assert c == j
        raw = json.loads((tmp_path / "r.json").read_text())
        assert all(isinstance(v, str) for v in raw[0].values())

    def test_lf_and_17_digits(self, tmp_path):
        path = write_report(self.rows(), tmp_path / "r.csv")
        data = path.read_bytes()
        assert b"\r" not in data
        row = next(csv.DictReader(data.decode().splitlines()))
        assert row["lr"] == "0.10000000000000001"

    def test_unknown_format(self, tmp_path):
        with pytest.raises(BenchError):
            write_report([], tmp_path / "r.csv", fmt="xml")


class TestCli:
    def test_run_writes_one_row(self, out_dir):
        code = main(["run", "--suite", "t3r1", "--n", "30", "--epochs-lbfgs", "100", "--lr", "0.1",
                     "--seed", "7", "--out", "r.csv"])
        assert code == 0
        rows = read_report(out_dir / "r.csv")
        assert len(rows) == 1 and rows[0]["suite_id"] == "t3r1" and rows[0]["seed"] == 7
        assert rows[0]["mae"] is not None and rows[0]["mae"] < 1e-2

    def test_unknown_suite_exit_one(self, out_dir, capsys):
        assert main(["run", "--suite", "nosuch"]) == 1
        assert "t3r1" in capsys.readouterr().err

    def test_repeat_is_byte_identical_apart_from_wall_time(self, out_dir):
        args = ["run", "--suite", "t3r1,ex3", "--n", "10", "--epochs-lbfgs", "5", "--seeds", "2"]
        main(args + ["--out", "a.csv"])
        main(args + ["--out", "b.csv"])
        assert strip_wall_time(out_dir / "a.csv") == strip_wall_time(out_dir / "b.csv")

    def test_env_var_sets_default_directory(self, out_dir):
        assert main(["quad-compare", "--function", "exp", "--n", "4,8"]) == 0
        assert (out_dir / "quad_compare.csv").exists()
        first = (out_dir / "quad_compare.csv").read_bytes()
        main(["quad-compare", "--function", "exp", "--n", "4,8"])
        assert (out_dir / "quad_compare.csv").read_bytes() == first

    def test_json_format(self, out_dir):
        assert main(["quad-compare", "--format", "json"]) == 0
        assert isinstance(json.loads((out_dir / "quad_compare.json").read_text()), list)

    def test_seeds_mark_one_best_row(self, out_dir):
        main(["run", "--suite", "t3r1", "--n", "8", "--epochs-lbfgs", "3", "--seeds", "3", "--out", "s.csv"])
        rows = read_report(out_dir / "s.csv")
        assert [r["seed"] for r in rows] == [42, 43, 44]
        assert sum(r["best"] for r in rows) == 1
        best = next(r for r in rows if r["best"])
        assert best["mae"] == min(r["mae"] for r in rows)

    def test_list(self, capsys):
        assert main(["list", "--group", "table3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 13 and lines[0].startswith("t3r1")

    def test_every_suite_id_is_listed(self, capsys):
        main(["list"])
        listed = [line.split()[0] for line in capsys.readouterr().out.strip().splitlines()]
        assert listed == suite_ids()


class TestSweep:
    def test_empty_product(self):
        with pytest.raises(BenchError):
            sweep(["ex1"], n_values=[])

    def test_single_cell_equals_run_row(self):
        (cell,) = sweep(["ex1"], n_values=[8], hidden_values=[(6,)], lr_values=[0.1], lbfgs_epochs=5)
        (row,) = run_suites(["ex1"], n_train=8, hidden=(6,), lr=0.1, lbfgs_epochs=5)
        for col in COLUMNS:
            if col not in ("wall_time_ms", "best"):
                assert cell[col] == row[col], col

    def test_suite_order_does_not_change_rows(self):
        a = run_suites(["t3r1", "ex3"], n_train=8, lbfgs_epochs=3)
        b = run_suites(["ex3", "t3r1"], n_train=8, lbfgs_epochs=3)
        key = lambda r: r["suite_id"]
        for x, y in zip(sorted(a, key=key), sorted(b, key=key)):
            assert x["final_loss"] == y["final_loss"] and x["mae"] == y["mae"]

    @pytest.mark.training
    def test_workers_do_not_change_rows(self):
        kw = dict(n_train=8, lbfgs_epochs=5)
        serial = run_suites(["ex1", "ex2"], seeds=[42, 43], **kw)
        pooled = run_suites(["ex1", "ex2"], seeds=[42, 43], workers=2, **kw)
        for x, y in zip(serial, pooled):
            assert x["final_loss"] == y["final_loss"] and x["mae"] == y["mae"]

    @pytest.mark.training
    def test_ex1_training_points(self, out_dir):
        assert main(["sweep", "--suite", "ex1", "--n", "5,10,20", "--out", "n.csv"]) == 0
        rows = read_report(out_dir / "n.csv")
        assert [r["n_train"] for r in rows] == [5, 10, 20]
        mae = {r["n_train"]: r["mae"] for r in rows}
        assert mae[10] <= 10 * mae[20]

    @pytest.mark.training
    def test_depth_sweep_stays_finite(self):
        depths = [(10,) * d for d in range(2, 7)]
        rows = sweep(["ex2"], n_values=[10], hidden_values=depths, lbfgs_epochs=30)
        assert len(rows) == 5
        assert all(r["stop_reason"] != "non-finite" and np.isfinite(r["final_loss"]) for r in rows)
