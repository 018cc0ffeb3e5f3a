import json
import math
from pathlib import Path

import numpy as np
import pytest

from catbench.cli import main
from catbench.config import config_hash, parse_override, resolve_config
from catbench.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    header = lines[1].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    return lines[0].split("=")[1], header, rows


def test_defaults_resolve_and_hash_is_stable():
    cfg = resolve_config({})
    h1 = config_hash(cfg)
    h2 = config_hash(resolve_config({}))
    assert h1 == h2
    cfg2 = resolve_config({"state": {"m": 4}})
    assert config_hash(cfg2) != h1


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        resolve_config({"state": {"bogus": 1}})
    with pytest.raises(ConfigError):
        resolve_config({"mystery": {}})
    with pytest.raises(ConfigError):
        resolve_config({"state": {"m": -1}})
    with pytest.raises(ConfigError):
        resolve_config({"state": {"m": True}})


def test_overrides():
    key, value = parse_override("state.m=4")
    assert key == "state.m" and value == 4
    key, value = parse_override('detector.kind="single"')
    assert value == "single"
    cfg = resolve_config({}, {"state.m": 5, "sampling.seed": 99})
    assert cfg["state"]["m"] == 5 and cfg["sampling"]["seed"] == 99
    with pytest.raises(ConfigError):
        resolve_config({}, {"state.nope": 1})
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")


def test_state_command_fig2(tmp_path):
    out = tmp_path / "fig2"
    rc = main(
        [
            "state",
            "--config",
            str(CONFIGS / "fig2.json"),
            "--out",
            str(out),
            "--set",
            "grid.points=201",
            "--set",
            "grid.phis=[0.0]",
            "--set",
            "grid.wigner_points=21",
            "--set",
            "grid.husimi_points=21",
        ]
    )
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["probability"] - 0.0337) < 0.0005
    h, header, rows = read_csv(out / "quadrature.csv")
    assert h == summary["config_hash"]
    assert header == ["phi", "x", "density"]
    for name in ("amplitudes.csv", "wigner.csv", "husimi.csv"):
        h2, _, _ = read_csv(out / name)
        assert h2 == h


def test_state_vacuum_ancilla_gaussian(tmp_path):
    out = tmp_path / "gauss"
    rc = main(
        [
            "state",
            "--config",
            str(CONFIGS / "fig2.json"),
            "--out",
            str(out),
            "--set",
            "state.n=0",
            "--set",
            "state.m=0",
            "--set",
            "grid.points=401",
            "--set",
            "grid.phis=[0.0]",
            "--set",
            "grid.wigner_points=21",
            "--set",
            "grid.husimi_points=21",
        ]
    )
    assert rc == 0
    _, _, rows = read_csv(out / "quadrature.csv")
    xs, dens = rows[:, 1], rows[:, 2]
    a = 0.81
    delta = 1 + a * a - 2 * a
    ref = np.exp(-(1 - a * a) * xs**2 / delta) / math.sqrt(math.pi * delta / (1 - a * a))
    assert np.max(np.abs(dens - ref)) < 1e-10


def test_malformed_config_no_partial_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"state": {"never": 1}}')
    out = tmp_path / "never_out"
    rc = main(["state", "--config", str(bad), "--out", str(out)])
    assert rc == 1
    assert not out.exists()


def test_numerical_error_exit_code(tmp_path):
    # dim far too small for the requested squeezing -> truncation error -> 2
    out = tmp_path / "trunc"
    rc = main(
        [
            "state",
            "--config",
            str(CONFIGS / "fig2.json"),
            "--out",
            str(out),
            "--set",
            "state.dim=16",
        ]
    )
    assert rc == 2


def test_detect_command_fig6(tmp_path):
    out = tmp_path / "fig6"
    rc = main(["detect", "--config", str(CONFIGS / "fig6.json"), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["prior_ratio_at_clicks"] - 0.12) < 0.02
    _, header, rows = read_csv(out / "click_priors.csv")
    assert header == ["k", "prior_chopping", "prior_single", "ratio"]
    k3 = rows[rows[:, 0] == 3][0]
    assert abs(k3[3] - 0.12) < 0.02


def test_detect_perfect_single_detector_zero_entropy(tmp_path):
    out = tmp_path / "pure"
    rc = main(
        [
            "detect",
            "--config",
            str(CONFIGS / "fig3a.json"),
            "--out",
            str(out),
            "--set",
            "detect.single_efficiency=1",
        ]
    )
    assert rc == 0
    _, header, rows = read_csv(out / "entropy_vs_channels.csv")
    assert np.all(rows[:, 2] == 0.0)


def test_detect_crossover_fig3a(tmp_path):
    out = tmp_path / "fig3a"
    rc = main(["detect", "--config", str(CONFIGS / "fig3a.json"), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["crossover_channels"] is not None
    assert summary["crossover_channels"] <= 50
    _, _, rows = read_csv(out / "entropy_vs_channels.csv")
    past = rows[rows[:, 0] >= summary["crossover_channels"]]
    assert np.all(past[:, 1] < past[:, 2])


def test_simulate_zero_samples_exact_only(tmp_path):
    out = tmp_path / "fig7"
    rc = main(["simulate", "--config", str(CONFIGS / "fig7.json"), "--out", str(out)])
    assert rc == 0
    assert (out / "exact_density.csv").exists()
    assert not (out / "histogram.csv").exists()
    _, header, _ = read_csv(out / "exact_density.csv")
    assert "smeared_pure_eta0.98" in header
    assert "smeared_pure_eta0.94" in header


def test_simulate_deterministic_bytes(tmp_path):
    args = [
        "simulate",
        "--config",
        str(CONFIGS / "fig4b.json"),
        "--set",
        "sampling.samples=20000",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "histogram.csv").read_bytes() == (out2 / "histogram.csv").read_bytes()
    assert (out1 / "exact_density.csv").read_bytes() == (
        out2 / "exact_density.csv"
    ).read_bytes()
    out3 = tmp_path / "c"
    assert main(args + ["--out", str(out3), "--seed", "777"]) == 0
    assert (out1 / "histogram.csv").read_bytes() != (out3 / "histogram.csv").read_bytes()


def test_reconstruct_command_small(tmp_path):
    out = tmp_path / "rec"
    rc = main(
        [
            "reconstruct",
            "--config",
            str(CONFIGS / "fig5b.json"),
            "--out",
            str(out),
            "--set",
            "sampling.samples=20000",
        ]
    )
    assert rc == 0
    _, header, rows = read_csv(out / "reconstruction.csv")
    assert header == ["x", "raw", "physical"]
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["reconstruction_k_max"] is not None
    xs, phys = rows[:, 0], rows[:, 2]
    assert abs(np.trapezoid(phys, xs) - 1.0) < 1e-9


def test_reconstruct_requires_samples(tmp_path):
    rc = main(
        [
            "reconstruct",
            "--config",
            str(CONFIGS / "fig5b.json"),
            "--out",
            str(tmp_path / "x"),
            "--set",
            "sampling.samples=0",
        ]
    )
    assert rc == 1


def test_detect_rejects_fock_ancilla(tmp_path):
    rc = main(
        [
            "detect",
            "--config",
            str(CONFIGS / "fig6.json"),
            "--out",
            str(tmp_path / "x"),
            "--set",
            "state.n=1",
        ]
    )
    assert rc == 1


def test_selftest_passes():
    assert main(["selftest"]) == 0


def test_usage_error_exit_code():
    assert main(["not-a-command"]) == 1
