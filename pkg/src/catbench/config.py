"""Run configuration: a single JSON document with schema validation,
dotted-path command-line overrides, and a content hash that stamps every
output file so downstream tooling can refuse mismatched inputs."""

from __future__ import annotations

import copy
import hashlib
import json
import math

from .errors import ConfigError

DEFAULTS = {
    "state": {
        "n": 0,
        "m": 3,
        "transmittance": 0.9,
        "kappa_mag": 0.9,
        "kappa_phase": math.pi,
        "phi_t": 0.0,
        "phi_r": 0.0,
        "dim": 256,
    },
    "grid": {
        "x_max": 8.0,
        "points": 801,
        "phis": [0.0],
        "wigner_range": 6.0,
        "wigner_points": 81,
        "husimi_range": 6.0,
        "husimi_points": 81,
    },
    "detector": {
        "kind": "chopping",
        "channels": 20,
        "efficiency": 0.9,
    },
    "detect": {
        "clicks": 3,
        "channels": 20,
        "channels_grid": [5, 10, 15, 20, 25, 30, 35, 40, 45, 50],
        "chopping_efficiency": 0.85,
        "single_efficiency": 0.3,
        "prior_k_max": 12,
    },
    "homodyne": {
        "phi": 0.0,
        "efficiencies": [],
    },
    "sampling": {
        "samples": 0,
        "seed": 12345,
        "bins": 101,
        "x_min": -8.0,
        "x_max": 8.0,
        "workers": 1,
    },
    "reconstruction": {
        "k_max": None,
    },
    "output": {
        "dir": "out",
    },
}

_VALIDATORS = {
    ("state", "n"): lambda v: isinstance(v, int) and v >= 0,
    ("state", "m"): lambda v: isinstance(v, int) and v >= 0,
    ("state", "transmittance"): lambda v: isinstance(v, (int, float)) and 0 < v < 1,
    ("state", "kappa_mag"): lambda v: isinstance(v, (int, float)) and 0 <= v < 1,
    ("state", "kappa_phase"): lambda v: isinstance(v, (int, float)),
    ("state", "phi_t"): lambda v: isinstance(v, (int, float)),
    ("state", "phi_r"): lambda v: isinstance(v, (int, float)),
    ("state", "dim"): lambda v: isinstance(v, int) and v >= 1,
    ("grid", "x_max"): lambda v: isinstance(v, (int, float)) and v > 0,
    ("grid", "points"): lambda v: isinstance(v, int) and v >= 11,
    ("grid", "phis"): lambda v: isinstance(v, list)
    and len(v) >= 1
    and all(isinstance(p, (int, float)) for p in v),
    ("grid", "wigner_range"): lambda v: isinstance(v, (int, float)) and v > 0,
    ("grid", "wigner_points"): lambda v: isinstance(v, int) and v >= 5,
    ("grid", "husimi_range"): lambda v: isinstance(v, (int, float)) and v > 0,
    ("grid", "husimi_points"): lambda v: isinstance(v, int) and v >= 5,
    ("detector", "kind"): lambda v: v in ("chopping", "single"),
    ("detector", "channels"): lambda v: isinstance(v, int) and v >= 1,
    ("detector", "efficiency"): lambda v: isinstance(v, (int, float)) and 0 < v <= 1,
    ("detect", "clicks"): lambda v: isinstance(v, int) and v >= 0,
    ("detect", "channels"): lambda v: isinstance(v, int) and v >= 1,
    ("detect", "channels_grid"): lambda v: isinstance(v, list)
    and len(v) >= 1
    and all(isinstance(n, int) and n >= 1 for n in v),
    ("detect", "chopping_efficiency"): lambda v: isinstance(v, (int, float)) and 0 < v <= 1,
    ("detect", "single_efficiency"): lambda v: isinstance(v, (int, float)) and 0 < v <= 1,
    ("detect", "prior_k_max"): lambda v: isinstance(v, int) and v >= 1,
    ("homodyne", "phi"): lambda v: isinstance(v, (int, float)),
    ("homodyne", "efficiencies"): lambda v: isinstance(v, list)
    and all(isinstance(e, (int, float)) and 0 < e <= 1 for e in v),
    ("sampling", "samples"): lambda v: isinstance(v, int) and v >= 0,
    ("sampling", "seed"): lambda v: isinstance(v, int) and 0 <= v < 2**64,
    ("sampling", "bins"): lambda v: isinstance(v, int) and v >= 10,
    ("sampling", "x_min"): lambda v: isinstance(v, (int, float)),
    ("sampling", "x_max"): lambda v: isinstance(v, (int, float)),
    ("sampling", "workers"): lambda v: isinstance(v, int) and v >= 1,
    ("reconstruction", "k_max"): lambda v: v is None or (isinstance(v, int) and v >= 0),
    ("output", "dir"): lambda v: isinstance(v, str) and len(v) > 0,
}


def _check_section(section: str, values: dict) -> None:
    known = DEFAULTS[section]
    for key, val in values.items():
        if key not in known:
            raise ConfigError(f"unknown key '{section}.{key}'")
        if isinstance(val, bool):  # bools pass isinstance(int) checks otherwise
            raise ConfigError(f"'{section}.{key}' must not be a boolean")
        check = _VALIDATORS[(section, key)]
        if not check(val):
            raise ConfigError(f"invalid value for '{section}.{key}': {val!r}")


def resolve_config(document: dict | None, overrides: dict | None = None) -> dict:
    """Merge a parsed JSON document and dotted-path overrides over the
    defaults; unknown keys are rejected at every level."""
    cfg = copy.deepcopy(DEFAULTS)
    document = document or {}
    if not isinstance(document, dict):
        raise ConfigError("configuration root must be a JSON object")
    for section, values in document.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section '{section}'")
        if not isinstance(values, dict):
            raise ConfigError(f"section '{section}' must be an object")
        _check_section(section, values)
        cfg[section].update(values)
    for path, value in (overrides or {}).items():
        parts = path.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override path must be 'section.key', got '{path}'")
        section, key = parts
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section '{section}'")
        _check_section(section, {key: value})
        cfg[section][key] = value
    if cfg["sampling"]["x_max"] <= cfg["sampling"]["x_min"]:
        raise ConfigError("sampling.x_max must exceed sampling.x_min")
    return cfg


def parse_override(text: str):
    """Parse one --set KEY=VALUE argument; the value is a JSON literal when
    possible, otherwise a bare string."""
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got '{text}'")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    document = None
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                document = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return resolve_config(document, overrides)


def config_hash(cfg: dict) -> str:
    """Stable content hash of the resolved configuration."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
