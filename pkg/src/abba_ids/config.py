"""Scenario configuration files: parsing, defaults, and the canonical echo."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .encoding import AffineInvertible, EncoderConfig, PrfDerived, default_config
from .simulation import (
    AdaptiveInject,
    AttackSpec,
    DeleteAt,
    InjectAt,
    NoAttack,
    SourceSpec,
    TamperAt,
)

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class ScenarioConfig:
    encoder: EncoderConfig
    source: SourceSpec
    attack: AttackSpec
    horizon: int
    trials: int = 1
    rng_seed: int = 0
    rekey_per_trial: bool = True
    boundary_levels: int = 3
    output_path: Optional[str] = None


_DEFAULT_ENCODER = default_config()
_ENCODER_KEYS = [f.name for f in fields(EncoderConfig)]
_SOURCE_DEFAULTS = {"symbol_dist": None, "mean_gap": 10.0, "count": None, "fixed_gap": None}
_TOP_DEFAULTS = {"horizon": 1000, "trials": 1, "rng_seed": 0, "rekey_per_trial": True,
                 "boundary_levels": 3, "output_path": None}
_ATTACK_FIELDS = {
    "none": (NoAttack, {}),
    "tamper": (TamperAt, {"index": -1, "symbol": None}),
    "delete": (DeleteAt, {"index": -1}),
    "inject": (InjectAt, {"tick": None, "symbol": None, "pulse_strategy": "none"}),
    "adaptive_inject": (AdaptiveInject, {"tick": None, "symbol": None, "persist_ticks": 0}),
}


def _int(value, path: str, *, allow_none: bool = False) -> Optional[int]:
    if value is None and allow_none:
        return None
    if isinstance(value, bool):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            pass
    raise ConfigError(path, f"expected an integer, got {value!r}")


def _mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(data: dict, allowed, path: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


class _Resolver:
    """Collects the dotted paths of every default that had to be filled in."""

    def __init__(self):
        self.defaults_applied: list[str] = []

    def get(self, data: dict, key: str, default, path: str):
        if key in data:
            return data[key]
        self.defaults_applied.append(f"{path}.{key}" if path else key)
        return default


def _parse_o_family(data, path: str):
    data = _mapping(data, path)
    kind = data.get("kind")
    if kind == "affine":
        _reject_unknown(data, ("kind", "offsets"), path)
        offsets = data.get("offsets")
        if not isinstance(offsets, list):
            raise ConfigError(f"{path}.offsets", "expected a list of integers")
        return AffineInvertible(tuple(_int(a, f"{path}.offsets[{i}]") for i, a in enumerate(offsets)))
    if kind == "prf":
        _reject_unknown(data, ("kind", "key"), path)
        return PrfDerived(_int(data.get("key"), f"{path}.key"))
    raise ConfigError(f"{path}.kind", f"expected 'affine' or 'prf', got {kind!r}")


def _parse_encoder(data, r: _Resolver) -> EncoderConfig:
    data = _mapping(data, "encoder")
    _reject_unknown(data, _ENCODER_KEYS, "encoder")
    kw: dict[str, Any] = {}
    for name in _ENCODER_KEYS:
        default = getattr(_DEFAULT_ENCODER, name)
        raw = r.get(data, name, None, "encoder")
        if name == "o_family":
            kw[name] = default if raw is None else _parse_o_family(raw, "encoder.o_family")
        elif name == "g_family":
            kw[name] = default if raw is None else raw
        else:
            kw[name] = default if raw is None else _int(raw, f"encoder.{name}")
    try:
        return EncoderConfig(**kw)
    except ValueError as exc:
        msg = str(exc)
        field = msg.split()[0]
        path = f"encoder.{field}" if field in _ENCODER_KEYS else "encoder"
        if "offset" in msg:
            path = "encoder.o_family"
        raise ConfigError(path, msg) from None


def _parse_source(data, alphabet_size: int, r: _Resolver) -> SourceSpec:
    data = _mapping(data, "source")
    _reject_unknown(data, _SOURCE_DEFAULTS, "source")
    vals = {k: r.get(data, k, d, "source") for k, d in _SOURCE_DEFAULTS.items()}
    dist = vals["symbol_dist"]
    if dist is None:
        dist = [1.0 / alphabet_size] * alphabet_size
    if not isinstance(dist, list) or len(dist) != alphabet_size:
        raise ConfigError("source.symbol_dist", f"expected a list of {alphabet_size} probabilities")
    try:
        return SourceSpec(tuple(dist), float(vals["mean_gap"]),
                          _int(vals["count"], "source.count", allow_none=True), None,
                          _int(vals["fixed_gap"], "source.fixed_gap", allow_none=True))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("source", str(exc)) from None


def _parse_attack(data, r: _Resolver) -> AttackSpec:
    data = _mapping(data, "attack")
    kind = r.get(data, "kind", "none", "attack")
    if kind not in _ATTACK_FIELDS:
        raise ConfigError("attack.kind", f"expected one of {sorted(_ATTACK_FIELDS)}, got {kind!r}")
    cls, defaults = _ATTACK_FIELDS[kind]
    _reject_unknown(data, ("kind", *defaults), "attack")
    kw = {}
    for key, default in defaults.items():
        raw = r.get(data, key, default, "attack")
        if key == "pulse_strategy":
            kw[key] = raw
        else:
            kw[key] = _int(raw, f"attack.{key}", allow_none=True)
    if kind in ("inject", "adaptive_inject") and kw["tick"] is None:
        raise ConfigError("attack.tick", "required for injection attacks")
    if kind == "inject" and kw["symbol"] is None:
        raise ConfigError("attack.symbol", "required for inject")
    try:
        return cls(**kw)
    except ValueError as exc:
        raise ConfigError("attack", str(exc)) from None


def parse_config(data: dict) -> tuple[ScenarioConfig, list[str]]:
    """Resolve a raw mapping into a :class:`ScenarioConfig`.

    Returns the config and the dotted paths of every default applied.
    """
    if not isinstance(data, dict):
        raise ConfigError("", "configuration must be a mapping")
    data = dict(data)
    data.pop("schema_version", None)
    _reject_unknown(data, ("encoder", "source", "attack", *_TOP_DEFAULTS), "")
    r = _Resolver()
    enc = _parse_encoder(r.get(data, "encoder", {}, ""), r)
    src = _parse_source(r.get(data, "source", {}, ""), enc.alphabet_size, r)
    attack = _parse_attack(r.get(data, "attack", {}, ""), r)
    top = {k: r.get(data, k, d, "") for k, d in _TOP_DEFAULTS.items()}
    horizon = _int(top["horizon"], "horizon")
    if horizon <= enc.t0:
        raise ConfigError("horizon", f"must be after t0={enc.t0} (got {horizon})")
    trials = _int(top["trials"], "trials")
    if trials < 1:
        raise ConfigError("trials", f"must be >= 1 (got {trials})")
    levels = _int(top["boundary_levels"], "boundary_levels")
    if levels < 1:
        raise ConfigError("boundary_levels", f"must be >= 1 (got {levels})")
    if not isinstance(top["rekey_per_trial"], bool):
        raise ConfigError("rekey_per_trial", "expected true or false")
    out = top["output_path"]
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path", "expected a string")
    cfg = ScenarioConfig(enc, src, attack, horizon, trials, _int(top["rng_seed"], "rng_seed"),
                         top["rekey_per_trial"], levels, out)
    return cfg, r.defaults_applied


def load_config(path) -> tuple[ScenarioConfig, list[str]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except Exception as exc:  # parser errors differ between formats
        raise ConfigError("", f"cannot parse {path}: {exc}") from None
    return parse_config(data)


def _hex(v: int) -> str:
    return f"0x{v:032x}"


def encoder_echo(enc: EncoderConfig) -> dict:
    if isinstance(enc.o_family, AffineInvertible):
        fam = {"kind": "affine", "offsets": list(enc.o_family.offsets)}
    else:
        fam = {"kind": "prf", "key": _hex(enc.o_family.key)}
    return {
        "alphabet_size": enc.alphabet_size,
        "tick": enc.tick,
        "levels": enc.levels,
        "seed_space": enc.seed_space,
        "o_family": fam,
        "g_key": _hex(enc.g_key),
        "s0": enc.s0,
        "t0": enc.t0,
        "g_family": enc.g_family,
    }


def attack_echo(attack: AttackSpec) -> dict:
    out = {"kind": attack.kind}
    for f in fields(attack):
        out[f.name] = getattr(attack, f.name)
    return out


def config_echo(cfg: ScenarioConfig) -> dict:
    """Fully resolved parameters; ``parse_config`` of this dict rebuilds ``cfg``."""
    return {
        "schema_version": SCHEMA_VERSION,
        "encoder": encoder_echo(cfg.encoder),
        "source": {
            "symbol_dist": list(cfg.source.symbol_dist),
            "mean_gap": cfg.source.mean_gap,
            "count": cfg.source.count,
            "fixed_gap": cfg.source.fixed_gap,
        },
        "attack": attack_echo(cfg.attack),
        "horizon": cfg.horizon,
        "trials": cfg.trials,
        "rng_seed": cfg.rng_seed,
        "rekey_per_trial": cfg.rekey_per_trial,
        "boundary_levels": cfg.boundary_levels,
        "output_path": cfg.output_path,
    }
