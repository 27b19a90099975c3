"""Flat key-value run configuration.

Configuration is a text file of `key = value` lines ('#' starts a comment)
merged over the frozen defaults below, then command-line overrides on top
(later wins). The defaults encode the canonical test parameters m = 1,
r = 1, I = (1, 2, 3), the seeded sampling plan, and every verification
tolerance and calibrated threshold, so that identical configs reproduce
byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SphereParams
from .verify import DEFAULT_TOLERANCES


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad value, or failed validation."""


MODELS = ("reduced", "full", "multiplier", "rescaled")
VERIFY_CHOICES = ("all", "jacobi", "casimir", "nonintegrability", "alpha",
                  "commute", "measure", "consistency")
VARIANT_CHOICES = ("all", "standard", "affine", "scaled")

# The default initial condition is one generic state shared by all models:
# gamma1..3 is the third row of the rotation exp(rot1..3), frozen at full
# precision so reduced and full/multiplier runs start from matching data.
DEFAULTS: dict = {
    "m": 1.0,
    "r": 1.0,
    "I1": 1.0,
    "I2": 2.0,
    "I3": 3.0,
    "model": "reduced",
    "K1": 1.0,
    "K2": 0.5,
    "K3": -0.8,
    "gamma1": 0.24903648038416884,
    "gamma2": 0.24666617456316428,
    "gamma3": 0.93655572699345557,
    "rot1": 0.3,
    "rot2": -0.2,
    "rot3": 0.4,
    "x0": 0.0,
    "y0": 0.0,
    "dt": 0.001,
    "steps": 100000,
    "stride": 100,
    "renorm_interval": 0,
    "out": "trajectory.csv",
    "seed": 15,
    "sample_count": 1000,
    "k_low": -3.0,
    "k_high": 3.0,
    "variant": "all",
    "report_out": "verify_report.txt",
    "commute_s": 0.1,
    "commute_t": 0.1,
    "commute_dt": 1e-4,
    "consistency_horizon": 10.0,
    "consistency_dt": 0.001,
    "nonintegrability_count": 10000,
    **DEFAULT_TOLERANCES,
}


@dataclass(frozen=True)
class RunConfig:
    params: SphereParams
    model: str
    K0: np.ndarray
    gamma0: np.ndarray
    rot: np.ndarray
    x0: float
    y0: float
    dt: float
    steps: int
    stride: int
    renorm_interval: int
    out: str
    seed: int
    sample_count: int
    k_low: float
    k_high: float
    variant: str
    report_out: str
    commute_s: float
    commute_t: float
    commute_dt: float
    consistency_horizon: float
    consistency_dt: float
    nonintegrability_count: int
    tolerances: dict


def parse_config_file(path: str) -> dict[str, str]:
    """Read `key = value` lines; unknown keys are errors."""
    raw: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = text.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


def parse_overrides(pairs) -> dict[str, str]:
    """Parse repeated KEY=VALUE command-line overrides."""
    raw: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form KEY=VALUE")
        key, value = pair.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = value.strip()
    return raw


def _coerce(key: str, value) -> object:
    default = DEFAULTS[key]
    if isinstance(value, str):
        try:
            if isinstance(default, bool):
                raise TypeError("no boolean keys")
            if isinstance(default, int):
                return int(value)
            if isinstance(default, float):
                return float(value)
            return value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    return value


def build_config(path: str | None = None, overrides=None) -> RunConfig:
    """Merge defaults, optional file, and overrides into a validated config."""
    merged = dict(DEFAULTS)
    if path is not None:
        merged.update(parse_config_file(path))
    merged.update(parse_overrides(overrides))
    vals = {key: _coerce(key, value) for key, value in merged.items()}

    if not vals["m"] > 0.0:
        raise ConfigError(f"mass must be positive, got {vals['m']}")
    try:
        params = SphereParams(vals["m"], vals["r"], (vals["I1"], vals["I2"], vals["I3"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if vals["model"] not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {vals['model']!r}")
    if vals["variant"] not in VARIANT_CHOICES:
        raise ConfigError(f"variant must be one of {VARIANT_CHOICES}, got {vals['variant']!r}")
    if not vals["dt"] > 0.0:
        raise ConfigError(f"dt must be positive, got {vals['dt']}")
    for key in ("steps", "stride", "sample_count", "nonintegrability_count"):
        if vals[key] < 1:
            raise ConfigError(f"{key} must be >= 1, got {vals[key]}")
    if vals["renorm_interval"] < 0:
        raise ConfigError(f"renorm_interval must be >= 0, got {vals['renorm_interval']}")
    if not vals["k_low"] < vals["k_high"]:
        raise ConfigError("k_low must be below k_high")
    for key in ("commute_s", "commute_t"):
        if not 0.0 < vals[key] <= 0.2:
            raise ConfigError(f"{key} must lie in (0, 0.2], got {vals[key]}")
    if not vals["commute_dt"] > 0.0 or not vals["consistency_dt"] > 0.0:
        raise ConfigError("commute_dt and consistency_dt must be positive")
    if not vals["consistency_horizon"] > 0.0:
        raise ConfigError("consistency_horizon must be positive")

    gamma0 = np.array([vals["gamma1"], vals["gamma2"], vals["gamma3"]])
    if abs(np.linalg.norm(gamma0) - 1.0) > 1e-10:
        raise ConfigError(f"gamma must be a unit vector, |gamma| = {np.linalg.norm(gamma0):.12g}")

    tolerances = {key: vals[key] for key in DEFAULT_TOLERANCES}
    return RunConfig(
        params=params,
        model=vals["model"],
        K0=np.array([vals["K1"], vals["K2"], vals["K3"]]),
        gamma0=gamma0,
        rot=np.array([vals["rot1"], vals["rot2"], vals["rot3"]]),
        x0=vals["x0"],
        y0=vals["y0"],
        dt=vals["dt"],
        steps=vals["steps"],
        stride=vals["stride"],
        renorm_interval=vals["renorm_interval"],
        out=vals["out"],
        seed=vals["seed"],
        sample_count=vals["sample_count"],
        k_low=vals["k_low"],
        k_high=vals["k_high"],
        variant=vals["variant"],
        report_out=vals["report_out"],
        commute_s=vals["commute_s"],
        commute_t=vals["commute_t"],
        commute_dt=vals["commute_dt"],
        consistency_horizon=vals["consistency_horizon"],
        consistency_dt=vals["consistency_dt"],
        nonintegrability_count=vals["nonintegrability_count"],
        tolerances=tolerances,
    )
