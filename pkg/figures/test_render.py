"""Tests for the figure scripts: they must render every panel from a fresh
CLI output tree without recomputing physics, and refuse inconsistent inputs."""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))
from render import RECIPES, RenderError, read_csv, render  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# scaled-down sampling so the whole tree builds in seconds
FAST = {
    "fig2": ["state", "--set", "grid.points=101", "--set", "grid.phis=[0.0,0.5,1.0]",
             "--set", "grid.wigner_points=31", "--set", "grid.husimi_points=21"],
    "fig3a": ["detect"],
    "fig3b": ["detect"],
    "fig4a": ["simulate", "--set", "sampling.samples=20000"],
    "fig4b": ["simulate", "--set", "sampling.samples=20000"],
    "fig5a": ["reconstruct", "--set", "sampling.samples=20000"],
    "fig5b": ["reconstruct", "--set", "sampling.samples=20000"],
    "fig5c": ["reconstruct", "--set", "sampling.samples=5000"],
    "fig5d": ["reconstruct", "--set", "sampling.samples=1000"],
    "fig6": ["detect"],
    "fig7": ["simulate"],
}

PANELS = {
    "2a": "fig2", "2b": "fig2", "3a": "fig3a", "3b": "fig3b",
    "4a": "fig4a", "4b": "fig4b", "5a": "fig5a", "5b": "fig5b",
    "5c": "fig5c", "5d": "fig5d", "6": "fig6", "7": "fig7",
}


@pytest.fixture(scope="module")
def output_tree(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli_out")
    for name, args in FAST.items():
        cmd = [
            sys.executable, "-m", "catbench.cli", args[0],
            "--config", str(CONFIGS / f"{name}.json"),
            "--out", str(base / name),
        ] + args[1:]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, f"{name}: {proc.stderr}"
    return base


@pytest.mark.parametrize("figure_id", sorted(RECIPES))
def test_renders_every_panel(output_tree, figure_id):
    run_dir = output_tree / PANELS[figure_id]
    out = render(figure_id, run_dir)
    assert out.exists()
    assert out.stat().st_size > 2000


def test_plotted_data_matches_csv(output_tree):
    # the dashed/dotted smearing curves must carry exactly the CSV columns
    import matplotlib.pyplot as plt

    run_dir = output_tree / "fig7"
    recipe = RECIPES["7"]
    fig = recipe.renderer(run_dir)
    path = run_dir / "exact_density.csv"
    _, header, data = read_csv(path)
    x = data[:, header.index("x")]
    by_label = {line.get_label(): line for line in fig.axes[0].lines}
    assert set(by_label) == {"ideal detection", "efficiency 0.98", "efficiency 0.94"}
    for label, colname in [
        ("ideal detection", "pure"),
        ("efficiency 0.98", "smeared_pure_eta0.98"),
        ("efficiency 0.94", "smeared_pure_eta0.94"),
    ]:
        line = by_label[label]
        assert np.array_equal(line.get_xdata(), x)
        assert np.array_equal(line.get_ydata(), data[:, header.index(colname)])
    styles = {by_label["efficiency 0.98"].get_linestyle(),
              by_label["efficiency 0.94"].get_linestyle()}
    assert styles == {"--", ":"}
    plt.close(fig)


def test_histogram_overlay_matches_csv(output_tree):
    import matplotlib.pyplot as plt

    run_dir = output_tree / "fig4b"
    fig = RECIPES["4b"].renderer(run_dir)
    ax = fig.axes[0]
    hist_path = run_dir / "histogram.csv"
    _, hh, hdata = read_csv(hist_path)
    dens = hdata[:, hh.index("density")]
    bars = [p.get_height() for p in ax.patches]
    assert np.allclose(bars, dens)
    assert len(ax.lines) == 1  # the solid theory line
    plt.close(fig)


def test_config_hash_mismatch_rejected(output_tree, tmp_path):
    src = output_tree / "fig4b"
    tampered = tmp_path / "tampered"
    tampered.mkdir()
    for name in ("exact_density.csv", "histogram.csv", "metadata.json"):
        (tampered / name).write_text((src / name).read_text())
    text = (tampered / "histogram.csv").read_text().splitlines()
    text[0] = "# config_hash=0000000000000000"
    (tampered / "histogram.csv").write_text("\n".join(text) + "\n")
    with pytest.raises(RenderError, match="mismatch"):
        render("4b", tampered)
    assert not (tampered / "fig4b.png").exists()


def test_empty_histogram_renders_theory_only(output_tree, tmp_path):
    import matplotlib.pyplot as plt

    src = output_tree / "fig4b"
    sparse = tmp_path / "sparse"
    sparse.mkdir()
    for name in ("exact_density.csv", "metadata.json"):
        (sparse / name).write_text((src / name).read_text())
    lines = (src / "histogram.csv").read_text().splitlines()
    (sparse / "histogram.csv").write_text("\n".join(lines[:2]) + "\n")  # header only
    fig = RECIPES["4b"].renderer(sparse)
    assert len(fig.axes[0].patches) == 0
    assert len(fig.axes[0].lines) == 1
    plt.close(fig)


def test_missing_column_is_descriptive(output_tree, tmp_path):
    src = output_tree / "fig3a"
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "summary.json").write_text((src / "summary.json").read_text())
    lines = (src / "entropy_vs_channels.csv").read_text().splitlines()
    lines[1] = lines[1].replace("entropy_chopping", "renamed")
    (broken / "entropy_vs_channels.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(RenderError) as err:
        render("3a", broken)
    assert "entropy_chopping" in str(err.value)
    assert "entropy_vs_channels.csv" in str(err.value)


def test_unknown_figure_and_missing_dir(tmp_path):
    with pytest.raises(RenderError):
        render("9z", tmp_path)
    with pytest.raises(RenderError):
        render("4a", tmp_path / "nowhere")


def test_cli_entry_point(output_tree, tmp_path):
    out = tmp_path / "panel.png"
    proc = subprocess.run(
        [
            sys.executable, str(ROOT / "figures" / "render.py"),
            "--figure", "6", "--dir", str(output_tree / "fig6"),
            "--out", str(out),
        ],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    bad = subprocess.run(
        [
            sys.executable, str(ROOT / "figures" / "render.py"),
            "--figure", "4a", "--dir", str(tmp_path / "missing"),
        ],
        capture_output=True, text=True,
    )
    assert bad.returncode == 1
    assert "missing" in bad.stderr
