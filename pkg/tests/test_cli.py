"""End-to-end tests for the command line interface."""

import json
import re
import subprocess
import sys

import pytest

from scnpower.cli import main
from scnpower.scenario import dbm_to_watts

DEMO_CONFIG = "configs/four_cell_demo.json"

NOISE_W = float(dbm_to_watts(-107.0))


def write_toy_scenario(tmp_path, scbs_budget_dbm=23.0):
    """One cell, one antenna, one user, linear SINR target 40."""
    cfg = {
        "num_antennas": 1,
        "noise_dbm": -107.0,
        "gateway_power_budget_dbm": 30.0,
        "sinr_units": "linear",
        "rng_seed": 0,
        "cells": [
            {
                "backhaul_distance_m": 100.0,
                "scbs_power_budget_dbm": scbs_budget_dbm,
                "ues": [{"distances_to_scbs_m": [10.0], "sinr_target": 40.0}],
            }
        ],
    }
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(cfg))
    return path


def write_toy_channels(tmp_path):
    """Unit-gain backhaul (|h| = 1) and a fixed access gain."""
    payload = {
        "backhaul_real": [[0.6]],
        "backhaul_imag": [[0.8]],
        "access_gain_sq": [[[2e-7]]],
    }
    path = tmp_path / "toy_channels.json"
    path.write_text(json.dumps(payload))
    return path


def write_sweep_config(tmp_path, seed=3, trials=4):
    cfg = {
        "sweep": {
            "distances_m": [150.0, 300.0],
            "trials": trials,
            "num_cells": 2,
            "seed": seed,
        },
        "radio": {
            "num_antennas": 4,
            "noise_dbm": -107.0,
            "gateway_power_budget_dbm": 30.0,
            "scbs_power_budget_dbm": 23.0,
        },
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    return path


class TestSolve:
    def test_demo_config_solves(self, capsys):
        assert main(["solve", "--config", DEMO_CONFIG]) == 0
        out = capsys.readouterr().out
        assert "scheme: dpc" in out
        assert "encoding order:" in out
        assert "network total:" in out
        assert "status: OK" in out

    def test_total_matches_closed_form(self, tmp_path, capsys):
        cfg = write_toy_scenario(tmp_path)
        ch = write_toy_channels(tmp_path)
        assert main(["solve", "--config", str(cfg), "--channels", str(ch)]) == 0
        out = capsys.readouterr().out
        match = re.search(r"network total: ([0-9.e+-]+) W", out)
        assert match, out
        # gamma * noise / gain on each hop, unit backhaul gain
        expected = 40.0 * NOISE_W * (1.0 / 1.0 + 1.0 / 2e-7)
        assert float(match.group(1)) == pytest.approx(expected, rel=2e-5)

    def test_outage_reported_with_exit_zero(self, tmp_path, capsys):
        cfg = write_toy_scenario(tmp_path, scbs_budget_dbm=-100.0)
        ch = write_toy_channels(tmp_path)
        assert main(["solve", "--config", str(cfg), "--channels", str(ch)]) == 0
        out = capsys.readouterr().out
        assert "status: OUTAGE" in out
        assert "network total" not in out

    def test_zfbf_prints_no_encoding_order(self, capsys):
        assert main(["solve", "--config", DEMO_CONFIG, "--scheme", "zfbf"]) == 0
        out = capsys.readouterr().out
        assert "scheme: zfbf" in out
        assert "encoding order" not in out

    def test_explicit_order_respected(self, capsys):
        rc = main(["solve", "--config", DEMO_CONFIG, "--order", "3,2,1,0"])
        assert rc == 0
        assert "encoding order: 3 2 1 0" in capsys.readouterr().out

    def test_bad_order_rejected(self, capsys):
        rc = main(["solve", "--config", DEMO_CONFIG, "--order", "0,0,1,2"])
        assert rc == 1
        assert "permutation" in capsys.readouterr().err

    def test_seed_override_is_deterministic(self, capsys):
        main(["solve", "--config", DEMO_CONFIG, "--seed", "5"])
        first = capsys.readouterr().out
        main(["solve", "--config", DEMO_CONFIG, "--seed", "5"])
        second = capsys.readouterr().out
        main(["solve", "--config", DEMO_CONFIG, "--seed", "6"])
        third = capsys.readouterr().out
        assert first == second
        assert first != third

    def test_missing_config_exits_one(self, capsys):
        rc = main(["solve", "--config", "no_such_file.json"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "no_such_file.json" in err
        assert "not found" in err

    def test_mismatched_channels_rejected(self, tmp_path, capsys):
        ch = write_toy_channels(tmp_path)
        rc = main(["solve", "--config", DEMO_CONFIG, "--channels", str(ch)])
        assert rc == 1
        assert "expects" in capsys.readouterr().err

    def test_unknown_order_strategy_rejected(self, capsys):
        rc = main(["solve", "--config", DEMO_CONFIG, "--order-strategy", "bogus"])
        assert rc == 1
        assert "invalid choice" in capsys.readouterr().err


class TestSweep:
    def test_writes_csv_and_summary(self, tmp_path, capsys):
        cfg = write_sweep_config(tmp_path)
        out = tmp_path / "results.csv"
        rc = main(["sweep", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        assert out.is_file()
        assert (tmp_path / "results.summary.json").is_file()
        text = capsys.readouterr().out
        assert "wrote" in text
        assert "4 rows" in text

    def test_config_file_left_untouched(self, tmp_path):
        cfg = write_sweep_config(tmp_path)
        before = cfg.read_bytes()
        main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert cfg.read_bytes() == before

    def test_json_format_writes_single_file(self, tmp_path):
        cfg = write_sweep_config(tmp_path)
        out = tmp_path / "results.json"
        rc = main(["sweep", "--config", str(cfg), "--out", str(out), "--format", "json"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert len(payload["rows"]) == 4
        assert not (tmp_path / "results.summary.json").exists()

    def test_trials_override_applies(self, tmp_path):
        cfg = write_sweep_config(tmp_path, trials=4)
        out = tmp_path / "r.csv"
        main(["sweep", "--config", str(cfg), "--out", str(out), "--trials", "2"])
        summary = json.loads((tmp_path / "r.summary.json").read_text())
        assert summary["spec"]["trials"] == 2

    def test_zero_trials_rejected(self, tmp_path, capsys):
        cfg = write_sweep_config(tmp_path)
        rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv"),
                   "--trials", "0"])
        assert rc == 1
        assert "trial" in capsys.readouterr().err

    def test_seed_override_equals_config_seed(self, tmp_path):
        cfg_a = write_sweep_config(tmp_path, seed=7)
        out_a = tmp_path / "a.csv"
        main(["sweep", "--config", str(cfg_a), "--out", str(out_a)])

        cfg_b = write_sweep_config(tmp_path, seed=0)
        out_b = tmp_path / "b.csv"
        main(["sweep", "--config", str(cfg_b), "--out", str(out_b), "--seed", "7"])
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_missing_output_directory_fails_fast(self, tmp_path, capsys):
        cfg = write_sweep_config(tmp_path)
        rc = main(["sweep", "--config", str(cfg),
                   "--out", str(tmp_path / "nope" / "r.csv")])
        assert rc == 1
        assert "output directory" in capsys.readouterr().err


class TestSelftest:
    def test_all_checks_pass(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "all" in out and "checks passed" in out
        assert "FAIL" not in out
        assert "duality power conservation" in out
        assert "closed-form agreement" in out

    def test_poisoned_tolerance_fails(self, capsys):
        rc = main(["selftest", "--tol-scale", "1e-16"])
        assert rc == 3
        out = capsys.readouterr().out
        assert "FAIL" in out
        assert "checks failed" in out


class TestParsing:
    def test_unknown_command_exits_one(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_required_argument_exits_one(self, capsys):
        assert main(["solve"]) == 1
        assert "--config" in capsys.readouterr().err

    def test_installed_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "scnpower.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "solve" in proc.stdout
        assert "sweep" in proc.stdout
        assert "selftest" in proc.stdout
