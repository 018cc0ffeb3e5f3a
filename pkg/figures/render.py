#!/usr/bin/env python3
"""Render publication-style figures from catbench CLI output directories.

Usage: python figures/render.py --figure 4b --dir out/fig4b [--out PATH]

Each figure id reads only the delimited files the CLI wrote (no physics is
recomputed here), refuses to overlay files whose configuration hashes
disagree, and writes a deterministic PNG beside its inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIGSIZE = (6.0, 4.2)
DPI = 150


class RenderError(RuntimeError):
    """Missing/inconsistent inputs or malformed columns."""


def read_csv(path: Path):
    """Returns (config_hash, header list, data array (possibly empty))."""
    if not path.exists():
        raise RenderError(f"missing input file: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# config_hash="):
        raise RenderError(f"{path} lacks the config-hash stamp")
    cfg_hash = lines[0].split("=", 1)[1]
    header = lines[1].split(",") if len(lines) > 1 else []
    rows = [[float(v) for v in line.split(",")] for line in lines[2:]]
    data = np.array(rows) if rows else np.empty((0, len(header)))
    return cfg_hash, header, data


def read_json_hash(path: Path) -> str:
    if not path.exists():
        raise RenderError(f"missing input file: {path}")
    payload = json.loads(path.read_text())
    if "config_hash" not in payload:
        raise RenderError(f"{path} lacks the config-hash stamp")
    return payload["config_hash"]


def column(path: Path, header: list[str], data: np.ndarray, name: str) -> np.ndarray:
    if name not in header:
        raise RenderError(f"{path} has no column '{name}' (found: {', '.join(header)})")
    return data[:, header.index(name)]


def check_hashes(hashes: dict[str, str]) -> str:
    values = set(hashes.values())
    if len(values) != 1:
        detail = ", ".join(f"{name}: {h}" for name, h in sorted(hashes.items()))
        raise RenderError(f"config-hash mismatch across inputs ({detail})")
    return values.pop()


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def render_quadrature_surface(run_dir: Path):
    path = run_dir / "quadrature.csv"
    h, header, data = read_csv(path)
    check_hashes({"quadrature.csv": h, "summary.json": read_json_hash(run_dir / "summary.json")})
    phi = column(path, header, data, "phi")
    x = column(path, header, data, "x")
    dens = column(path, header, data, "density")
    phis = np.unique(phi)
    xs = np.unique(x)
    grid = dens.reshape(phis.size, xs.size)
    fig = plt.figure(figsize=FIGSIZE)
    ax = fig.add_subplot(projection="3d")
    PP, XX = np.meshgrid(phis, xs, indexing="ij")
    ax.plot_surface(XX, PP, grid, cmap="viridis", linewidth=0)
    ax.set_xlabel("x")
    ax.set_ylabel("phase")
    ax.set_zlabel("p(x, phase)")
    return fig


def render_wigner_surface(run_dir: Path):
    path = run_dir / "wigner.csv"
    h, header, data = read_csv(path)
    check_hashes({"wigner.csv": h, "summary.json": read_json_hash(run_dir / "summary.json")})
    x = column(path, header, data, "x")
    y = column(path, header, data, "y")
    w = column(path, header, data, "w")
    xs = np.unique(x)
    ys = np.unique(y)
    grid = w.reshape(ys.size, xs.size)
    fig = plt.figure(figsize=FIGSIZE)
    ax = fig.add_subplot(projection="3d")
    XX, YY = np.meshgrid(xs, ys)
    ax.plot_surface(XX, YY, grid, cmap="coolwarm", linewidth=0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("W(x, y)")
    return fig


def render_entropies(run_dir: Path):
    path = run_dir / "entropy_vs_channels.csv"
    h, header, data = read_csv(path)
    check_hashes(
        {
            "entropy_vs_channels.csv": h,
            "summary.json": read_json_hash(run_dir / "summary.json"),
        }
    )
    n = column(path, header, data, "channels")
    s_chop = column(path, header, data, "entropy_chopping")
    s_single = column(path, header, data, "entropy_single")
    fig, ax = _new_axes("channels", "Shannon entropy (nats)")
    ax.plot(n, s_chop, "o-", label="chopping")
    ax.plot(n, s_single, "k--", label="single detector")
    ax.legend()
    return fig


def render_histogram_overlay(run_dir: Path):
    exact_path = run_dir / "exact_density.csv"
    hist_path = run_dir / "histogram.csv"
    h1, eh, edata = read_csv(exact_path)
    hashes = {"exact_density.csv": h1, "metadata.json": read_json_hash(run_dir / "metadata.json")}
    hist = None
    if hist_path.exists():
        h2, hh, hdata = read_csv(hist_path)
        hashes["histogram.csv"] = h2
        hist = (hh, hdata)
    check_hashes(hashes)
    fig, ax = _new_axes("x", "p(x | k clicks)")
    if hist is not None and hist[1].size:
        hh, hdata = hist
        left = column(hist_path, hh, hdata, "bin_left")
        right = column(hist_path, hh, hdata, "bin_right")
        dens = column(hist_path, hh, hdata, "density")
        ax.bar(
            0.5 * (left + right),
            dens,
            width=right - left,
            color="0.8",
            edgecolor="0.4",
            label="sampled",
        )
    x = column(exact_path, eh, edata, "x")
    mix = column(exact_path, eh, edata, "mixture")
    ax.plot(x, mix, "b-", label="mixture density")
    ax.legend()
    return fig


def render_reconstruction(run_dir: Path):
    rec_path = run_dir / "reconstruction.csv"
    exact_path = run_dir / "exact_density.csv"
    h1, rh, rdata = read_csv(rec_path)
    h2, eh, edata = read_csv(exact_path)
    check_hashes(
        {
            "reconstruction.csv": h1,
            "exact_density.csv": h2,
            "metadata.json": read_json_hash(run_dir / "metadata.json"),
        }
    )
    fig, ax = _new_axes("x", "p(x | m)")
    xr = column(rec_path, rh, rdata, "x")
    raw = column(rec_path, rh, rdata, "raw")
    ax.step(xr, raw, where="mid", color="0.4", label="reconstructed")
    x = column(exact_path, eh, edata, "x")
    pure = column(exact_path, eh, edata, "pure")
    ax.plot(x, pure, "b-", label="target state")
    ax.legend()
    return fig


def render_click_priors(run_dir: Path):
    path = run_dir / "click_priors.csv"
    h, header, data = read_csv(path)
    check_hashes(
        {"click_priors.csv": h, "summary.json": read_json_hash(run_dir / "summary.json")}
    )
    k = column(path, header, data, "k")
    chop = column(path, header, data, "prior_chopping")
    single = column(path, header, data, "prior_single")
    fig, ax = _new_axes("clicks k", "prior probability")
    ax.bar(k - 0.2, chop, width=0.4, color="0.3", label="chopping")
    ax.bar(k + 0.2, single, width=0.4, color="white", edgecolor="0.3",
           hatch="//", label="single detector")
    ax.legend()
    return fig


def render_smearing_comparison(run_dir: Path):
    path = run_dir / "exact_density.csv"
    h, header, data = read_csv(path)
    check_hashes(
        {"exact_density.csv": h, "metadata.json": read_json_hash(run_dir / "metadata.json")}
    )
    x = column(path, header, data, "x")
    pure = column(path, header, data, "pure")
    fig, ax = _new_axes("x", "p(x | m)")
    ax.plot(x, pure, "b-", label="ideal detection")
    styles = {"0.98": "r--", "0.94": "g:"}
    for eta, style in styles.items():
        dens = column(path, header, data, f"smeared_pure_eta{eta}")
        ax.plot(x, dens, style, label=f"efficiency {eta}")
    ax.legend()
    return fig


@dataclass(frozen=True)
class FigureRecipe:
    """What one panel needs and how it is drawn."""

    figure_id: str
    inputs: tuple[str, ...]
    renderer: object
    note: str


RECIPES = {
    "2a": FigureRecipe("2a", ("quadrature.csv", "summary.json"),
                       render_quadrature_surface, "quadrature surface"),
    "2b": FigureRecipe("2b", ("wigner.csv", "summary.json"),
                       render_wigner_surface, "Wigner surface"),
    "3a": FigureRecipe("3a", ("entropy_vs_channels.csv", "summary.json"),
                       render_entropies, "entropy curves"),
    "3b": FigureRecipe("3b", ("entropy_vs_channels.csv", "summary.json"),
                       render_entropies, "entropy curves"),
    "4a": FigureRecipe("4a", ("exact_density.csv", "metadata.json"),
                       render_histogram_overlay, "theory line + histogram"),
    "4b": FigureRecipe("4b", ("exact_density.csv", "metadata.json"),
                       render_histogram_overlay, "theory line + histogram"),
    "5a": FigureRecipe("5a", ("reconstruction.csv", "exact_density.csv", "metadata.json"),
                       render_reconstruction, "reconstruction + target"),
    "5b": FigureRecipe("5b", ("reconstruction.csv", "exact_density.csv", "metadata.json"),
                       render_reconstruction, "reconstruction + target"),
    "5c": FigureRecipe("5c", ("reconstruction.csv", "exact_density.csv", "metadata.json"),
                       render_reconstruction, "reconstruction + target"),
    "5d": FigureRecipe("5d", ("reconstruction.csv", "exact_density.csv", "metadata.json"),
                       render_reconstruction, "reconstruction + target"),
    "6": FigureRecipe("6", ("click_priors.csv", "summary.json"),
                      render_click_priors, "prior bars, solid vs hatched"),
    "7": FigureRecipe("7", ("exact_density.csv", "metadata.json"),
                      render_smearing_comparison,
                      "solid ideal, dashed 0.98, dotted 0.94"),
}


def render(figure_id: str, run_dir: Path, out_path: Path | None = None) -> Path:
    if figure_id not in RECIPES:
        raise RenderError(
            f"unknown figure id '{figure_id}' (choose from {', '.join(sorted(RECIPES))})"
        )
    recipe = RECIPES[figure_id]
    for name in recipe.inputs:
        if not (run_dir / name).exists():
            raise RenderError(f"missing input file: {run_dir / name}")
    fig = recipe.renderer(run_dir)
    if out_path is None:
        out_path = run_dir / f"fig{figure_id}.png"
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--figure", required=True, help="figure id, e.g. 4b")
    parser.add_argument("--dir", required=True, help="catbench output directory")
    parser.add_argument("--out", help="output image path (default: <dir>/fig<ID>.png)")
    args = parser.parse_args(argv)
    try:
        out = render(
            args.figure, Path(args.dir), Path(args.out) if args.out else None
        )
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
