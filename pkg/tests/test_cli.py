"""CLI behavior: config validation, outputs, determinism, golden files."""

import json

import numpy as np
import pytest

from sharpe_rmt.cli import main

from conftest import DATA_DIR


def run_cli(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


SIM_CFG = {
    "task": "sharpe_known",
    "n": 80,
    "trials": 3,
    "design": {"p": 40, "seed": 11, "q_grid": [0.2, 1.0, 2.0]},
}


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_writes_expected_files(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CFG)
    rc, _, err = run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "out")], capsys)
    assert rc == 0, err
    out = tmp_path / "out"
    for name in ("report.csv", "report.json", "curves.csv", "manifest.json"):
        assert (out / name).exists()
    curves = (out / "curves.csv").read_text().splitlines()
    assert curves[0] == "cell,mean_true,mean_hat"
    assert len(curves) == 4  # header + one row per q
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 11 and manifest["command"] == "simulate"


def test_simulate_byte_identical_reruns(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CFG)
    rc1, _, _ = run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "a")], capsys)
    rc2, _, _ = run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "b")], capsys)
    assert rc1 == 0 and rc2 == 0
    for name in ("report.csv", "report.json", "curves.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_seed_override_changes_output(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CFG)
    run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "a")], capsys)
    run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "99"], capsys)
    assert (tmp_path / "a" / "curves.csv").read_bytes() != \
        (tmp_path / "b" / "curves.csv").read_bytes()


def test_simulate_rejects_unknown_keys(tmp_path, capsys):
    bad = dict(SIM_CFG)
    bad["bogus"] = 1
    cfg = write_config(tmp_path, bad)
    rc, _, err = run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "o")], capsys)
    assert rc == 1 and "bogus" in err


def test_simulate_rejects_empty_grid(tmp_path, capsys):
    bad = json.loads(json.dumps(SIM_CFG))
    bad["design"]["q_grid"] = []
    cfg = write_config(tmp_path, bad)
    rc, _, err = run_cli(["simulate", "--config", cfg, "--out", str(tmp_path / "o")], capsys)
    assert rc == 1 and "q_grid" in err


def test_simulate_rolls_back_partial_outputs(tmp_path, capsys, monkeypatch):
    from sharpe_rmt.simgen import MonteCarloReport

    def boom(self, path):
        raise OSError("disk full")

    monkeypatch.setattr(MonteCarloReport, "to_json", boom)
    cfg = write_config(tmp_path, SIM_CFG)
    out = tmp_path / "out"
    rc, _, err = run_cli(["simulate", "--config", cfg, "--out", str(out)], capsys)
    assert rc == 1
    assert not (out / "report.csv").exists()  # rolled back


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def test_estimate_golden_file(capsys):
    rc, out, _ = run_cli(["estimate", "--panel", str(DATA_DIR / "panel_50x20.csv")],
                         capsys)
    assert rc == 0
    golden = (DATA_DIR / "estimate_golden.json").read_text()
    assert out == golden


def test_estimate_zero_reg_correction_is_one_minus_c(capsys):
    rc, out, _ = run_cli(["estimate", "--panel", str(DATA_DIR / "panel_50x20.csv")],
                         capsys)
    payload = json.loads(out)
    assert payload["correction"] == 1.0 - payload["c"]
    assert payload["bias_term"] == pytest.approx(
        payload["c"] / (1.0 - payload["c"]), rel=1e-14)


def test_estimate_known_mu_mode(tmp_path, capsys):
    mu = np.zeros(20)
    mu_path = tmp_path / "mu.npy"
    np.save(mu_path, mu + 2e-4)
    rc, out, _ = run_cli([
        "estimate", "--panel", str(DATA_DIR / "panel_50x20.csv"),
        "--mu", str(mu_path), "--q-base", "identity", "--q-scale", "1e-4",
    ], capsys)
    assert rc == 0
    payload = json.loads(out)
    assert payload["mode"] == "hat_known_mu"
    assert payload["q_label"] == "q=0.0001*I"
    assert payload["value"] == payload["t_n1"] / np.sqrt(payload["t_n2_hat"])


def test_estimate_missing_panel_fails(capsys):
    rc, _, err = run_cli(["estimate", "--panel", "/nonexistent.csv"], capsys)
    assert rc == 1 and err


# ---------------------------------------------------------------------------
# frontier / select
# ---------------------------------------------------------------------------

def test_frontier_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "panel": str(DATA_DIR / "panel_50x20.csv"),
        "q": {"base": "identity", "scale": 1e-4},
        "mu0_grid": [1e-4, 2e-4, 3e-4],
    })
    rc, _, err = run_cli(["frontier", "--config", cfg, "--out", str(tmp_path / "f")], capsys)
    assert rc == 0, err
    lines = (tmp_path / "f" / "frontier.csv").read_text().strip().splitlines()
    assert lines[0] == "mu0,sigma_hat"
    assert len(lines) == 4  # one row per mu0


def test_select_command_single_candidate(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "panel": str(DATA_DIR / "panel_50x20.csv"),
        "candidates": {"base": "identity", "scales": [1e-4]},
        "criterion": "max_sr_unknown",
    })
    rc, out, err = run_cli(["select", "--config", cfg, "--out", str(tmp_path / "s")], capsys)
    assert rc == 0, err
    assert out.strip() == "q=0.0001*I"
    lines = (tmp_path / "s" / "scores.csv").read_text().strip().splitlines()
    assert lines[0] == "label,score,chosen"
    assert lines[1].endswith(",1")


# ---------------------------------------------------------------------------
# backtest
# ---------------------------------------------------------------------------

def test_backtest_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "panel": str(DATA_DIR / "backtest_panel_600x30.csv"),
        "lookback_months": 2,
        "test_start": "2020-06",
        "test_end": "2020-12",
        "candidates": {"base": "identity", "scales": [1e-5, 1e-4]},
        "strategy": "gmv",
        "forward_window_months": 3,
    })
    rc, _, err = run_cli(["backtest", "--config", cfg, "--out", str(tmp_path / "bt")], capsys)
    assert rc == 0, err
    for name in ("monthly.csv", "windows.csv", "daily.csv", "report.json",
                 "manifest.json"):
        assert (tmp_path / "bt" / name).exists()


def test_backtest_command_reproduces_golden_report(tmp_path, capsys):
    # the CLI path must produce the exact bytes of the frozen golden report
    cfg = write_config(tmp_path, {
        "panel": str(DATA_DIR / "backtest_panel_600x30.csv"),
        "lookback_months": 1,
        "test_start": "2020-03",
        "test_end": "2022-03",
        "candidates": {"base": "identity", "scales": [1e-5, 5e-5, 1e-4, 3e-4]},
        "strategy": "mv_sample_mu",
        "forward_window_months": 6,
    })
    out = tmp_path / "bt"
    rc, _, err = run_cli(["backtest", "--config", cfg, "--out", str(out)], capsys)
    assert rc == 0, err
    for name in ("monthly.csv", "windows.csv", "daily.csv", "report.json"):
        assert (out / name).read_bytes() == \
            (DATA_DIR / "golden_backtest" / name).read_bytes()
