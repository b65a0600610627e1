"""Sweep machinery and CLI tests: config parsing, CSV schema, exit codes."""
import json
import math

import numpy as np
import pandas as pd
import pytest

from rdpclab.cli import main
from rdpclab.sweep import (
    CSV_COLUMNS,
    SweepConfig,
    SweepConfigError,
    analyze_sweep,
    read_csv,
    run_sweep,
    write_csv,
)

FAST_SOLVER = {
    "max_outer": 2,
    "codec_iters": 1500,
    "inner_iters": 100,
    "barrier_max_updates": 12,
}


def tiny_config(**overrides):
    base = dict(
        n=5,
        cn_seed=4,
        cn_variance=4.0,
        p0=0.5,
        m_list=(1,),
        dist_grid=(6.0,),
        perc_grid=(4.1,),
        cls_grid=(0.1,),
        seeds=(0,),
        solver=dict(FAST_SOLVER),
    )
    base.update(overrides)
    return SweepConfig(**base)


def write_config(path, **overrides):
    blob = dict(
        n=5,
        cn_seed=4,
        cn_variance=4.0,
        p0=0.5,
        m=[1],
        dist_grid=[6.0],
        perc_grid=[4.1],
        cls_grid=[0.1],
        seeds=[0],
        solver=dict(FAST_SOLVER),
    )
    blob.update(overrides)
    path.write_text(json.dumps(blob))
    return path


class TestSweepConfig:
    def test_from_file_roundtrip(self, tmp_path):
        path = write_config(tmp_path / "cfg.json", m=[1, 2], seeds=[0, 1])
        config = SweepConfig.from_file(path)
        assert config.m_list == (1, 2)
        assert config.seeds == (0, 1)
        assert config.solver["max_outer"] == 2

    def test_rejects_unsorted_grid(self):
        with pytest.raises(SweepConfigError):
            tiny_config(dist_grid=(6.0, 5.0))

    def test_rejects_empty_seed_list(self):
        with pytest.raises(SweepConfigError):
            tiny_config(seeds=())

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(SweepConfigError):
            SweepConfig.from_file(tmp_path / "nope.json")

    def test_rejects_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SweepConfigError):
            SweepConfig.from_file(path)

    def test_cell_order_is_lexicographic(self):
        config = tiny_config(m_list=(1, 2), dist_grid=(5.0, 6.0), seeds=(0, 1))
        cells = config.cells()
        assert len(cells) == 8
        assert cells[0] == (1, 5.0, 4.1, 0.1, 0)
        assert cells[-1] == (2, 6.0, 4.1, 0.1, 1)


class TestRunSweep:
    def test_rows_follow_schema(self):
        rows = run_sweep(tiny_config())
        assert len(rows) == 1
        assert set(rows[0]) == set(CSV_COLUMNS)
        assert rows[0]["feasible"] is True

    def test_infeasible_cell_yields_nan_row(self):
        # C=0.01 needs more Mahalanobis separation than P=4.1 noise allows here
        rows = run_sweep(tiny_config(dist_grid=(0.001,)))
        row = rows[0]
        assert row["feasible"] is False
        assert math.isnan(row["rate_nats"])

    def test_rerun_identical(self):
        config = tiny_config()
        assert run_sweep(config) == run_sweep(config)


class TestCsvRoundtrip:
    def test_write_read(self, tmp_path):
        rows = run_sweep(tiny_config())
        path = tmp_path / "out.csv"
        write_csv(rows, path)
        df = read_csv(path)
        assert list(df.columns) == CSV_COLUMNS
        assert df.loc[0, "rate_nats"] == pytest.approx(rows[0]["rate_nats"], rel=1e-15)

    def test_write_is_byte_stable(self, tmp_path):
        rows = run_sweep(tiny_config())
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(rows, a)
        write_csv(rows, b)
        assert a.read_bytes() == b.read_bytes()

    def test_read_rejects_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("seed,n\n1,5\n")
        with pytest.raises(SweepConfigError):
            read_csv(path)


class TestAnalyzeSweep:
    @staticmethod
    def frame(curve_values, m=2, cls=0.1):
        rows = []
        for d, r in zip(range(len(curve_values)), curve_values):
            rows.append(
                dict(
                    seed=0, n=5, m=m, dist_budget=float(d), perc_budget=4.1,
                    cls_budget=cls, rate_nats=r, rate_bits=r / math.log(2), distortion=1.0,
                    perception_bound=1.0, bhattacharyya=0.05, classification_margin=1.0,
                    feasible=True, converged=True, outer_iters=1,
                )
            )
        return pd.DataFrame(rows)

    def test_decreasing_convex_curve_passes(self):
        res = analyze_sweep(self.frame([4.0, 2.0, 1.0, 0.7, 0.6]))
        assert res["all_curves_ok"]

    def test_increasing_curve_fails(self):
        res = analyze_sweep(self.frame([1.0, 2.0, 3.0]))
        assert not res["all_curves_ok"]

    def test_concave_curve_fails(self):
        res = analyze_sweep(self.frame([3.0, 2.9, 1.0]))
        assert not res["all_curves_ok"]

    def test_flat_curve_with_jitter_passes(self):
        res = analyze_sweep(self.frame([1.0, 1.0001, 0.9999, 1.00005]))
        curve = res["curves"][0]
        assert curve["flat"] and curve["non_increasing"] and curve["convex"]

    def test_cls_comparison(self):
        df = pd.concat(
            [self.frame([3.0, 2.0, 1.0], cls=0.1), self.frame([2.0, 1.5, 0.5], cls=0.3)]
        )
        res = analyze_sweep(df)
        assert res["all_cls_ok"]
        assert res["cls_comparisons"][0]["cls_small"] == 0.1

    def test_m_comparison(self):
        df = pd.concat([self.frame([2.0, 1.0], m=2), self.frame([3.0, 1.5], m=3)])
        res = analyze_sweep(df)
        assert res["all_m_ok"]


class TestCli:
    def test_solve_prints_json(self, capsys):
        code = main(
            [
                "solve", "--n", "5", "--m", "1", "--dist", "6.0", "--perc", "4.1",
                "--cls", "0.1", "--seed", "0",
            ]
        )
        assert code == 0
        blob = json.loads(capsys.readouterr().out)
        assert blob["feasible"] is True

    def test_solve_infeasible_exit_2(self, capsys):
        code = main(
            ["solve", "--m", "1", "--dist", "6.0", "--perc", "4.1", "--cls", "0.1", "--cn-seed", "0"]
        )
        assert code == 2

    def test_solve_bad_budget_exit_1(self):
        assert main(["solve", "--m", "1", "--dist", "-1", "--perc", "4.1", "--cls", "0.1"]) == 1

    def test_usage_error_exit_1(self):
        assert main(["solve", "--m", "1"]) == 1

    def test_sweep_and_report(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", dist_grid=[5.0, 6.0, 7.0])
        out = tmp_path / "rows.csv"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        capsys.readouterr()
        assert main(["report", str(out), "--out", str(tmp_path / "rep"), "--no-figures"]) == 0
        printed = capsys.readouterr().out
        assert "report.json" not in printed  # report prints check lines, not paths
        report = json.loads((tmp_path / "rep" / "report.json").read_text())
        assert "curves" in report

    def test_report_renders_figures(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", dist_grid=[5.0, 6.0])
        out = tmp_path / "rows.csv"
        main(["sweep", "--config", str(cfg), "--out", str(out)])
        assert main(["report", str(out), "--out", str(tmp_path / "rep")]) == 0
        pngs = list((tmp_path / "rep").glob("*.png"))
        assert pngs, "report should render figure files next to report.json"

    def test_report_missing_csv_exit_1(self, tmp_path):
        assert main(["report", str(tmp_path / "missing.csv")]) == 1

    def test_sweep_bad_config_exit_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["sweep", "--config", str(bad), "--out", str(tmp_path / "o.csv")]) == 1

    def test_verify_quick_exit_0(self, capsys):
        assert main(["verify", "--quick"]) == 0
        blob = json.loads(capsys.readouterr().out)
        assert blob["all_passed"] is True
