import json
import math
import re
from pathlib import Path

import numpy as np
import pytest

from pensionlab.cli import main, parse_config

TRIVIAL = {
    "market": {"mu": 0.0, "r": 0.0, "sigma": 0.15},
    "preferences": {"alpha": -1.0, "rho": -1.0, "b": 0.0},
    "grid": {"t0": 0, "dt": 1, "T": 2},
    "mortality": {"gompertz": {"a": 0.0, "b": 0.0, "c": 0.0}},
    "mode": "individual",
    "budget": 1.0,
}

DEFAULTISH = {
    "market": {"mu": 0.082, "r": 0.047, "sigma": 0.15, "r_CPI": 0.02},
    "preferences": {"alpha": -1.0, "rho": -1.0, "b": 0.0},
    "grid": {"t0": 65, "dt": 1, "T": 95},
    "mortality": {"gompertz": {"a": 0.0, "b": 8.888014533421656e-24, "c": 0.6}},
    "mode": "infinite",
    "budget": 100000.0,
    "simulation": {"paths": 400, "seed": 99},
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return p


def read_csv(path):
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestSolveCommand:
    def test_two_period_rows(self, tmp_path):
        cfg = write_cfg(tmp_path, TRIVIAL)
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "value.csv")
        assert header == ["t", "i", "z", "c_star"]
        assert float(rows[0][0]) == 0.0 and rows[0][1] == "0"
        assert float(rows[0][2]) == 0.25 and float(rows[0][3]) == 0.5
        assert float(rows[1][2]) == 1.0 and float(rows[1][3]) == 1.0
        mheader, mrows = read_csv(tmp_path / "meta.csv")
        assert mheader == ["a_star", "xi"]
        assert float(mrows[0][0]) == 0.0 and float(mrows[0][1]) == 0.0

    def test_single_member_fund_matches_individual(self, tmp_path):
        cfg_i = dict(DEFAULTISH, mode="individual")
        cfg_f = dict(DEFAULTISH, mode="finite:1")
        p_i = write_cfg(tmp_path, cfg_i, "i.json")
        p_f = write_cfg(tmp_path, cfg_f, "f.json")
        out_i, out_f = tmp_path / "oi", tmp_path / "of"
        assert main(["solve", "--config", str(p_i), "--out", str(out_i)]) == 0
        assert main(["solve", "--config", str(p_f), "--out", str(out_f)]) == 0
        _, rows_i = read_csv(out_i / "value.csv")
        _, rows_f = read_csv(out_f / "value.csv")
        assert len(rows_i) == len(rows_f)
        for ri, rf in zip(rows_i, rows_f):
            assert ri[1] == "0" and rf[1] == "1"
            assert abs(float(ri[2]) - float(rf[2])) <= 1e-12
            assert abs(float(ri[3]) - float(rf[3])) <= 1e-12

    def test_reruns_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, DEFAULTISH)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["solve", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "value.csv").read_bytes() == (out2 / "value.csv").read_bytes()
        assert (out1 / "meta.csv").read_bytes() == (out2 / "meta.csv").read_bytes()

    def test_12_significant_digits(self, tmp_path):
        cfg = write_cfg(tmp_path, DEFAULTISH)
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "value.csv")
        pat = re.compile(r"^-?\d\.\d{11}e[+-]\d{2,3}$")
        assert pat.match(rows[0][2]) and pat.match(rows[0][3])


class TestDistributionCommand:
    def test_roundtrip_full_printed_precision(self, tmp_path):
        cfg = write_cfg(tmp_path, DEFAULTISH)
        assert main(["distribution", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "dist.csv")
        assert header == ["t", "mu_x", "sigma_x", "mu_gamma", "sigma_gamma"]
        for row in rows:
            for cell in row:
                assert f"{float(cell):.11e}" == cell

    def test_finite_mode_unsupported(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(DEFAULTISH, mode="finite:3"))
        assert main(["distribution", "--config", str(cfg), "--out", str(tmp_path)]) == 2


class TestSimulateCommand:
    def test_overlay_and_seed_stability(self, tmp_path):
        cfg = write_cfg(tmp_path, DEFAULTISH)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "paths_summary.csv").read_bytes() == (out2 / "paths_summary.csv").read_bytes()
        header, rows = read_csv(out1 / "paths_summary.csv")
        assert header == [
            "t", "q05", "q25", "q50", "q75", "q95", "mean_log_x", "sd_log_x",
            "mean_log_x_analytic", "sd_log_x_analytic",
        ]
        paths = DEFAULTISH["simulation"]["paths"]
        for row in rows[1:6]:
            mean, sd = float(row[6]), float(row[7])
            mu_ref, sd_ref = float(row[8]), float(row[9])
            assert abs(mean - mu_ref) <= 3.0 * sd_ref / math.sqrt(paths)
            assert abs(sd - sd_ref) <= 3.0 * sd_ref * math.sqrt(0.5 / (paths - 1))

    def test_deterministic_single_path(self, tmp_path):
        cfg = dict(TRIVIAL, simulation={"paths": 1, "seed": 3})
        p = write_cfg(tmp_path, cfg)
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "paths_summary.csv")
        for row in rows:
            quantiles = {row[1], row[2], row[3], row[4], row[5]}
            assert len(quantiles) == 1  # single path: all quantiles identical

    def test_simulation_block_required(self, tmp_path):
        cfg = write_cfg(tmp_path, TRIVIAL)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


class TestScenariosCommand:
    def test_scenario_table(self, tmp_path):
        cfg = dict(DEFAULTISH)
        cfg["scenarios"] = [
            {"id": "1", "mu": 0.062, "r": 0.027, "n": "infinite"},
            {"id": "2", "mu": 0.062, "r": 0.027, "n": 1},
            {"id": "3", "mu": 0.027, "r": 0.027, "n": "infinite"},
            {"id": "4", "mu": 0.0, "r": 0.0, "n": "infinite"},
        ]
        p = write_cfg(tmp_path, cfg)
        assert main(["scenarios", "--config", str(p), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "scenarios.csv")
        assert header == ["scenario", "mu", "r", "n", "outperformance"]
        outs = {row[0]: float(row[4]) for row in rows}
        assert outs["1"] > outs["2"] > outs["3"] > -1e-10
        assert abs(outs["4"]) <= 1e-10
        assert rows[0][3] == "inf" and rows[1][3] == "1"
        iheader, irows = read_csv(tmp_path / "improvements.csv")
        assert iheader == ["scenario_a", "scenario_b", "improvement"]
        got = {(a, b): float(v) for a, b, v in irows}
        assert got[("1", "2")] == pytest.approx(
            (1 + outs["1"]) / (1 + outs["2"]) - 1, rel=1e-12
        )
        assert len(irows) == 12

    def test_scenarios_required(self, tmp_path):
        p = write_cfg(tmp_path, DEFAULTISH)
        assert main(["scenarios", "--config", str(p), "--out", str(tmp_path)]) == 2


class TestConvergeCommand:
    def test_bound_column(self, tmp_path, capsys):
        cfg = dict(DEFAULTISH)
        cfg["n_list"] = [1, 2, 4, 8, 16, 32, 64]
        p = write_cfg(tmp_path, cfg)
        assert main(["converge", "--config", str(p), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "convergence.csv")
        assert header == ["n", "z_n", "abs_diff", "bound"]
        diffs = [float(row[2]) for row in rows]
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
        for row in rows:
            if int(row[0]) >= 4:
                assert float(row[2]) <= float(row[3]) * (1 + 1e-12)
        assert "fit:" in capsys.readouterr().out

    def test_n_list_required(self, tmp_path):
        p = write_cfg(tmp_path, DEFAULTISH)
        assert main(["converge", "--config", str(p), "--out", str(tmp_path)]) == 2


class TestConfigHandling:
    def test_print_config_roundtrip(self, tmp_path, capsys):
        p = write_cfg(tmp_path, DEFAULTISH)
        assert main(["solve", "--config", str(p), "--print-config"]) == 0
        echoed = capsys.readouterr().out
        again = parse_config(json.loads(echoed), tmp_path)
        original = parse_config(json.loads(p.read_text()), tmp_path)
        assert again.market == original.market
        assert again.prefs == original.prefs
        assert again.grid == original.grid
        assert again.mode == original.mode
        assert np.array_equal(again.mortality.p, original.mortality.p)

    def test_unknown_keys_rejected(self, tmp_path):
        bad = dict(TRIVIAL)
        bad["budgett"] = 2.0
        p = write_cfg(tmp_path, bad)
        assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 2
        bad2 = dict(TRIVIAL, market={"mu": 0.0, "r": 0.0, "sigma": 0.15, "vol": 1})
        p2 = write_cfg(tmp_path, bad2, "b2.json")
        assert main(["solve", "--config", str(p2), "--out", str(tmp_path)]) == 2

    def test_inflation_adjustment(self, tmp_path):
        p = write_cfg(tmp_path, DEFAULTISH)
        cfg = parse_config(json.loads(p.read_text()), tmp_path)
        assert cfg.market.mu == pytest.approx(0.062)
        assert cfg.market.r == pytest.approx(0.027)

    def test_csv_mortality_source(self, tmp_path):
        (tmp_path / "mort.csv").write_text(
            "age,qx\n" + "".join(f"{a},0.1\n" for a in range(65, 95)), encoding="utf-8"
        )
        cfg = dict(DEFAULTISH, mortality={"csv": "mort.csv"})
        p = write_cfg(tmp_path, cfg)
        assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 0

    def test_missing_file_and_bad_json(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["solve", "--config", str(bad)]) == 2

    def test_bad_mode_string(self, tmp_path):
        p = write_cfg(tmp_path, dict(TRIVIAL, mode="finite:zero"))
        assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_divergence_exit_code(self, tmp_path):
        cfg = {
            "market": {"mu": 10.0, "r": 10.0, "sigma": 0.2},
            "preferences": {"alpha": 0.5, "rho": 0.5, "b": 0.0},
            "grid": {"t0": 0, "dt": 1, "T": 200},
            "mortality": {"gompertz": {"a": 0.0, "b": 0.0, "c": 0.0}},
            "mode": "individual",
            "budget": 1.0,
        }
        p = write_cfg(tmp_path, cfg)
        assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 3
