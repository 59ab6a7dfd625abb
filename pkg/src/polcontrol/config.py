"""Flat ``key: value`` configuration files.

One setting per line, ``#`` starts a comment, and every file carries a
``schema: 1`` version field.  Unknown keys are rejected rather than ignored
so that typos surface instead of silently reverting to defaults.
"""

from __future__ import annotations

import os
import re
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigInvalid
from .pcm import CalibrationParams

SCHEMA_VERSION = "1"
ENV_VAR = "POLCONTROL_CONFIG"

_STAGE_KEY = re.compile(r"^stage([1-8])\.(v_pi|v_0|v_bias_a|v_bias_c)$")

_KNOWN_KEYS = {
    "schema",
    "stages",
    "profile",
    "seed",
    "tick_dt_us",
    "max_ticks",
    "target",
    "reference",
    "drift_sigma",
    "alignment_error_rad",
    "settle_threshold_rad",
    "pipeline.bits",
    "pipeline.noise_sigma",
    "pipeline.intensity",
    "pipeline.responsivity",
    "serve.frame_hz",
    "serve.loop_hz",
}


def parse_config(text: str) -> dict[str, str]:
    """Parse config text into a key -> raw-string map, validating schema."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, value = (part.strip() for part in line.split(":", 1))
        if not key or not value:
            raise ConfigInvalid(f"line {lineno}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        if key not in _KNOWN_KEYS and not _STAGE_KEY.match(key):
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    if out.get("schema") != SCHEMA_VERSION:
        raise ConfigInvalid(
            f"config must declare 'schema: {SCHEMA_VERSION}', got {out.get('schema')!r}"
        )
    return out


def load_config(path: str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_path_from_env(default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(ENV_VAR, default)


def get_float(cfg: dict[str, str], key: str, default: float) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigInvalid(f"{key}: expected a number, got {cfg[key]!r}") from None


def get_int(cfg: dict[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigInvalid(f"{key}: expected an integer, got {cfg[key]!r}") from None


def get_str(cfg: dict[str, str], key: str, default: str) -> str:
    return cfg.get(key, default)


def get_vec3(cfg: dict[str, str], key: str, default: Sequence[float]) -> np.ndarray:
    if key not in cfg:
        return np.asarray(default, dtype=float)
    parts = cfg[key].split()
    if len(parts) != 3:
        raise ConfigInvalid(f"{key}: expected three numbers, got {cfg[key]!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigInvalid(f"{key}: expected three numbers, got {cfg[key]!r}") from None


def get_bits(cfg: dict[str, str], key: str, default: Optional[int]) -> Optional[int]:
    """Bit depth or the literal ``none`` for an ideal (unquantized) path."""
    if key not in cfg:
        return default
    raw = cfg[key].lower()
    if raw == "none":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigInvalid(f"{key}: expected an integer or 'none', got {cfg[key]!r}") from None


def stage_calibrations(
    cfg: dict[str, str], default: CalibrationParams, stages: int
) -> list[CalibrationParams]:
    """Per-stage constants from the config, falling back to ``default`` for
    any stage without a complete set of four keys."""
    out = []
    for i in range(1, stages + 1):
        keys = {f"stage{i}.{name}" for name in ("v_pi", "v_0", "v_bias_a", "v_bias_c")}
        present = keys & cfg.keys()
        if not present:
            out.append(default)
            continue
        if present != keys:
            missing = sorted(keys - present)
            raise ConfigInvalid(f"stage {i}: incomplete calibration, missing {missing}")
        try:
            out.append(
                CalibrationParams(
                    v_pi=float(cfg[f"stage{i}.v_pi"]),
                    v_0=float(cfg[f"stage{i}.v_0"]),
                    v_bias_a=float(cfg[f"stage{i}.v_bias_a"]),
                    v_bias_c=float(cfg[f"stage{i}.v_bias_c"]),
                )
            )
        except ValueError as err:
            raise ConfigInvalid(f"stage {i}: {err}") from None
    return out


def calibration_text(cals: Sequence[CalibrationParams]) -> str:
    """Human-editable calibration block, volts at 6 significant digits."""
    lines = [f"schema: {SCHEMA_VERSION}", f"stages: {len(cals)}"]
    for i, cal in enumerate(cals, start=1):
        lines.append(f"stage{i}.v_pi: {cal.v_pi:.6g}")
        lines.append(f"stage{i}.v_0: {cal.v_0:.6g}")
        lines.append(f"stage{i}.v_bias_a: {cal.v_bias_a:.6g}")
        lines.append(f"stage{i}.v_bias_c: {cal.v_bias_c:.6g}")
    return "\n".join(lines) + "\n"


def write_calibration(path: str, cals: Sequence[CalibrationParams]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(calibration_text(cals))
