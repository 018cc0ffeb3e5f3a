"""Command-line front end.

Subcommands: state | detect | simulate | reconstruct | selftest.  Every run
resolves one JSON configuration (with --set overrides), computes first, then
writes CSV grids plus a JSON summary stamped with the configuration hash.
Exit codes: 1 configuration error, 2 numerical error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import config_hash, load_config, parse_override
from .detection import (
    ChoppingDetector,
    SingleDetector,
    bernoulli_matrix,
    click_prior,
    compose_chopping_loss,
    entropy_vs_channels,
    posterior_weights,
    purity_limit_report,
    shannon_entropy,
)
from .errors import ConfigError, NumericalError
from .fock import SqueezeParams, mean_photon_number
from .phase_space import husimi, quadrature_density_fock, wigner
from .prepare import (
    BeamSplitterParams,
    PreparationConfig,
    beam_splitter_output,
    conditional_state,
    fix_global_phase,
    heralded_state,
    normalization_constant,
    photon_count_prior,
    preparation_probability,
    squeezed_vacuum,
    vacuum_norm_legendre,
    vacuum_norm_log,
)
from .reconstruction import chopping_inverse
from .simulate import HistogramSpec, run_experiment


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_csv(path: Path, header: list[str], rows, cfg_hash: str) -> None:
    lines = [f"# config_hash={cfg_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )


def _preparation(cfg: dict) -> PreparationConfig:
    st = cfg["state"]
    bs = BeamSplitterParams.from_transmittance(
        st["transmittance"], st["phi_t"], st["phi_r"]
    )
    kappa = st["kappa_mag"] * complex(math.cos(st["kappa_phase"]), math.sin(st["kappa_phase"]))
    sq = SqueezeParams.from_kappa(kappa)
    return PreparationConfig(bs, sq, st["n"], st["m"], st["dim"])


def _detector(cfg: dict):
    det = cfg["detector"]
    if det["kind"] == "chopping":
        return ChoppingDetector(det["channels"], det["efficiency"])
    return SingleDetector(det["efficiency"])


def _require_vacuum_ancilla(cfg: dict, command: str) -> None:
    if cfg["state"]["n"] != 0:
        raise ConfigError(
            f"'{command}' models the vacuum-ancilla source; set state.n = 0"
        )


def cmd_state(cfg: dict, out_dir: Path) -> dict:
    prep = _preparation(cfg)
    state = heralded_state(prep)
    norm = normalization_constant(prep)
    prob = preparation_probability(prep)
    mean_n = mean_photon_number(state)

    grid = cfg["grid"]
    xs = np.linspace(-grid["x_max"], grid["x_max"], grid["points"])
    h = config_hash(cfg)

    rows = [
        (p, state.amps[p].real, state.amps[p].imag, abs(state.amps[p]) ** 2)
        for p in range(state.dim)
    ]
    write_csv(out_dir / "amplitudes.csv", ["p", "re", "im", "prob"], rows, h)

    quad_rows = []
    for phi in grid["phis"]:
        dens = quadrature_density_fock(state, phi, xs)
        quad_rows.extend((phi, x, d) for x, d in zip(xs, dens))
    write_csv(out_dir / "quadrature.csv", ["phi", "x", "density"], quad_rows, h)

    wg = np.linspace(-grid["wigner_range"], grid["wigner_range"], grid["wigner_points"])
    WX, WY = np.meshgrid(wg, wg)
    W = wigner(state, WX, WY)
    write_csv(
        out_dir / "wigner.csv",
        ["x", "y", "w"],
        ((x, y, v) for x, y, v in zip(WX.ravel(), WY.ravel(), W.ravel())),
        h,
    )

    hg = np.linspace(-grid["husimi_range"], grid["husimi_range"], grid["husimi_points"])
    HX, HY = np.meshgrid(hg, hg)
    Q = husimi(state, HX, HY)
    write_csv(
        out_dir / "husimi.csv",
        ["x", "y", "q"],
        ((x, y, v) for x, y, v in zip(HX.ravel(), HY.ravel(), Q.ravel())),
        h,
    )

    summary = {
        "config_hash": h,
        "n": prep.n,
        "m": prep.m,
        "nu": prep.nu,
        "kappa_p": [prep.kappa_p.real, prep.kappa_p.imag],
        "probability": prob,
        "normalization_constant": norm,
        "mean_photon_number": mean_n,
        "dim": prep.dim,
    }
    write_json(out_dir / "summary.json", summary)
    return summary


def cmd_detect(cfg: dict, out_dir: Path) -> dict:
    _require_vacuum_ancilla(cfg, "detect")
    prep = _preparation(cfg)
    det = cfg["detect"]
    prior = photon_count_prior(prep.bs, prep.kappa)
    m_max = len(prior) - 1
    h = config_hash(cfg)

    k = det["clicks"]
    s_single = shannon_entropy(
        posterior_weights(bernoulli_matrix(det["single_efficiency"], m_max), prior, k)
    )
    grid_n = det["channels_grid"]
    s_chop = entropy_vs_channels(prior, k, det["chopping_efficiency"], grid_n)
    write_csv(
        out_dir / "entropy_vs_channels.csv",
        ["channels", "entropy_chopping", "entropy_single"],
        ((n, s, s_single) for n, s in zip(grid_n, s_chop)),
        h,
    )

    chop_matrix = compose_chopping_loss(det["channels"], cfg["detector"]["efficiency"], m_max)
    single_matrix = bernoulli_matrix(det["single_efficiency"], m_max)
    pk_chop = click_prior(chop_matrix, prior)
    pk_single = click_prior(single_matrix, prior)
    k_top = min(det["prior_k_max"], m_max)
    rows = []
    for kk in range(k_top + 1):
        ratio = pk_single[kk] / pk_chop[kk] if pk_chop[kk] > 0 else float("nan")
        rows.append((kk, pk_chop[kk], pk_single[kk], ratio))
    write_csv(
        out_dir / "click_priors.csv",
        ["k", "prior_chopping", "prior_single", "ratio"],
        rows,
        h,
    )

    crossover = None
    for n_ch, s in zip(grid_n, s_chop):
        if s < s_single:
            crossover = int(n_ch)
            break
    purity = purity_limit_report(prior, k)
    summary = {
        "config_hash": h,
        "clicks": k,
        "entropy_single": s_single,
        "entropy_chopping": {str(n): float(s) for n, s in zip(grid_n, s_chop)},
        "crossover_channels": crossover,
        "prior_ratio_at_clicks": float(pk_single[k] / pk_chop[k]),
        "purity_limits": purity,
    }
    write_json(out_dir / "summary.json", summary)
    return summary


def _experiment(cfg: dict, reconstruct: bool):
    prep = _preparation(cfg)
    model = _detector(cfg)
    samp = cfg["sampling"]
    grid = cfg["grid"]
    hist = HistogramSpec(samp["x_min"], samp["x_max"], samp["bins"])
    xs = np.linspace(-grid["x_max"], grid["x_max"], grid["points"])
    return run_experiment(
        bs=prep.bs,
        kappa=prep.kappa,
        model=model,
        k=cfg["detect"]["clicks"],
        phi=cfg["homodyne"]["phi"],
        samples=samp["samples"],
        seed=samp["seed"],
        hist=hist,
        xs=xs,
        homodyne_etas=tuple(cfg["homodyne"]["efficiencies"]),
        reconstruct=reconstruct,
        k_max=cfg["reconstruction"]["k_max"],
        workers=samp["workers"],
    )


def _write_experiment(cfg: dict, out_dir: Path, record) -> dict:
    h = config_hash(cfg)
    header = ["x", "mixture", "pure"]
    columns = [record.xs, record.mixture_density, record.pure_density]
    for eta, dens in sorted(record.smeared_mixture.items()):
        header.append(f"smeared_mixture_eta{eta:g}")
        columns.append(dens)
    for eta, dens in sorted(record.smeared_pure.items()):
        header.append(f"smeared_pure_eta{eta:g}")
        columns.append(dens)
    write_csv(out_dir / "exact_density.csv", header, zip(*columns), h)

    if record.histogram_counts is not None:
        edges = record.histogram_edges
        counts = record.histogram_counts
        total = counts.sum()
        width = edges[1] - edges[0]
        rows = []
        for i, c in enumerate(counts):
            dens = c / (total * width) if total else 0.0
            rows.append((edges[i], edges[i + 1], c, dens))
        write_csv(
            out_dir / "histogram.csv",
            ["bin_left", "bin_right", "count", "density"],
            rows,
            h,
        )

    if record.reconstruction_raw is not None:
        write_csv(
            out_dir / "reconstruction.csv",
            ["x", "raw", "physical"],
            zip(
                record.reconstruction_xs,
                record.reconstruction_raw,
                record.reconstruction_physical,
            ),
            h,
        )

    meta = {
        "config_hash": h,
        "clicks": record.clicks,
        "phi": record.phi,
        "seed": record.seed,
        "samples": record.samples,
        "detector": record.detector,
        "entropy": record.entropy,
        "click_priors": np.asarray(record.click_priors).tolist(),
        "posterior_weights": np.asarray(record.weights).tolist(),
        "photon_prior": np.asarray(record.photon_prior).tolist(),
        "reconstruction_k_max": record.reconstruction_k_max,
    }
    write_json(out_dir / "metadata.json", meta)
    return meta


def cmd_simulate(cfg: dict, out_dir: Path) -> dict:
    _require_vacuum_ancilla(cfg, "simulate")
    record = _experiment(cfg, reconstruct=False)
    return _write_experiment(cfg, out_dir, record)


def cmd_reconstruct(cfg: dict, out_dir: Path) -> dict:
    _require_vacuum_ancilla(cfg, "reconstruct")
    if cfg["sampling"]["samples"] <= 0:
        raise ConfigError("reconstruct needs sampling.samples > 0")
    record = _experiment(cfg, reconstruct=True)
    return _write_experiment(cfg, out_dir, record)


def cmd_selftest(cfg: dict, out_dir: Path) -> dict:
    """Fast internal consistency run: oracle equivalence, the Legendre
    normalization closed form, and the triangular inverse identity."""
    del cfg, out_dir
    checks: list[tuple[str, bool]] = []
    ok_all = True
    for t_sq in (0.5, 0.9):
        for akappa in (0.3, 0.9):
            bs = BeamSplitterParams.from_transmittance(t_sq)
            sq = SqueezeParams.from_kappa(-akappa)
            dim = 256
            for n in range(3):
                sv = squeezed_vacuum(sq, dim)
                out = beam_splitter_output(sv, n, bs)
                for m in range(3):
                    prep = PreparationConfig(bs, sq, n, m, dim)
                    st_c = heralded_state(prep)
                    st_o, prob_o = conditional_state(out, m)
                    a = fix_global_phase(st_o).amps[:dim]
                    b = fix_global_phase(st_c).amps
                    coeff_ok = bool(np.max(np.abs(a - b)) < 1e-10)
                    prob_c = preparation_probability(prep)
                    prob_ok = bool(abs(prob_o - prob_c) <= 1e-8 * prob_o)
                    checks.append(
                        (
                            f"oracle n={n} m={m} T2={t_sq} |k|={akappa}",
                            coeff_ok and prob_ok,
                        )
                    )

    for m in range(7):
        direct = math.exp(vacuum_norm_log(m, 0.81))
        closed = vacuum_norm_legendre(m, 0.81)
        checks.append(
            (f"legendre norm m={m}", bool(abs(direct - closed) < 1e-10 * closed))
        )

    inv = chopping_inverse(20, 0.9, 8)
    p = compose_chopping_loss(20, 0.9, 7)[:8, :8]
    checks.append(
        ("chopping inverse identity", bool(np.max(np.abs(inv @ p - np.eye(8))) < 1e-10))
    )

    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        ok_all = ok_all and ok
    if not ok_all:
        raise NumericalError("selftest failed")
    return {"checks": len(checks), "passed": True}


COMMANDS = {
    "state": cmd_state,
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catbench",
        description="Heralded cat-like states on a beam splitter: "
        "simulation, detection models, homodyne sampling, reconstruction.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry by dotted path, e.g. state.m=4",
    )
    parser.add_argument("--out", help="output directory (default from config)")
    parser.add_argument("--seed", type=int, help="override sampling.seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage problems are configuration errors
        return 0 if exc.code in (0, None) else 1

    try:
        overrides = dict(parse_override(item) for item in args.overrides)
        if args.seed is not None:
            overrides["sampling.seed"] = args.seed
        cfg = load_config(args.config, overrides)
        out_dir = Path(args.out if args.out is not None else cfg["output"]["dir"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command != "selftest":
            out_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
