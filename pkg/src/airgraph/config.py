"""Flat key = value run configuration.

UTF-8 text, one assignment per line, ``#`` starts a comment. Unknown
keys are hard errors so typos never pass silently. Every command writes
the fully resolved configuration into its output directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # input paths
    stations: str = ""
    series: str = ""
    # graph thresholds
    distance_threshold_km: float = 300.0
    altitude_threshold_km: float = 1.2
    # model
    variant: str = "aea_wind"
    horizon: int = 6
    hidden_edge: int = 32
    hidden_state: int = 32
    # training
    batch_size: int = 32
    max_epochs: int = 50
    early_stop_patience: int = 10
    lr: float = 5e-4
    weight_decay: float = 5e-4
    rmsprop_rho: float = 0.9
    rmsprop_eps: float = 1e-8
    seeds: tuple[int, ...] = (0,)
    eval_horizons: tuple[int, ...] = (3, 6, 12, 24)
    # split scheme: dataset1 | dataset2 | dataset3 | fractions | custom
    split: str = "fractions"
    train_frac: float = 0.6
    val_frac: float = 0.2
    train_start: str = ""
    train_end: str = ""
    val_start: str = ""
    val_end: str = ""
    test_start: str = ""
    test_end: str = ""
    # synthetic generator
    synth_nodes: int = 16
    synth_steps: int = 2000
    synth_layout: str = "grid"
    synth_spacing_km: float = 140.0
    synth_wind_regime: str = "rotating"
    synth_wind_speed: float = 5.0
    synth_coeff_low: float = 0.2
    synth_coeff_high: float = 1.0
    synth_coeff_outlier_frac: float = 0.0
    synth_coeff_outlier_low: float = 2.5
    synth_coeff_outlier_high: float = 3.5
    synth_n_sources: int = 3
    synth_source_rate: float = 6.0
    synth_source_uniform: int = 0
    synth_source_pulse_period: int = 0
    synth_decay: float = 0.05
    synth_noise_std: float = 0.5
    synth_burn_in: int = 64
    synth_seed: int = 0


def _parse_value(name: str, raw: str, kind) -> object:
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
        if kind == tuple[int, ...]:
            if not raw:
                return ()
            return tuple(int(part.strip()) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from None
    raise ConfigError(f"unsupported config field type for {name}")


def _field_kind(name: str):
    default = getattr(RunConfig(), name)
    if isinstance(default, str):
        return str
    if isinstance(default, tuple):
        return tuple[int, ...]
    if isinstance(default, int):
        return int
    return float


def parse_config(path) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            name, raw = (part.strip() for part in text.split("=", 1))
            if name not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {name!r}")
            if name in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {name!r}")
            values[name] = _parse_value(name, raw, _field_kind(name))
    return RunConfig(**values)


def write_config(config: RunConfig, path) -> None:
    """Resolved copy: every field, declaration order, one per line."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
