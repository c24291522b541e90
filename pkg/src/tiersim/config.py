"""JSON run/sweep configuration with explicit units.

Quantities are either raw numbers in base units (bytes, bytes/s, seconds,
FLOP/s) or strings with a unit suffix: decimal sizes ("80 GB"), binary
sizes ("4 KiB"), rates ("10 GB/s"), times ("10 us"), compute ("35.2
GFLOP/s").  Decimal prefixes are powers of 1000; the *iB forms are powers
of 1024 -- configs say which they mean, the ambiguity never reaches the
model.  Unknown keys anywhere in a config are rejected by name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Optional

from .tiers import NumaSpec, SpecError, SystemSpec, TierSpec

_DEC = {"": 1, "K": 10**3, "M": 10**6, "G": 10**9, "T": 10**12, "P": 10**15}
_BIN = {"Ki": 2**10, "Mi": 2**20, "Gi": 2**30, "Ti": 2**40, "Pi": 2**50}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}

_SIZE_RE = re.compile(r"^\s*([0-9.]+)\s*([KMGTP]i?)?B\s*$")
_RATE_RE = re.compile(r"^\s*([0-9.]+)\s*([KMGTP]i?)?B/s\s*$")
_TIME_RE = re.compile(r"^\s*([0-9.]+)\s*(s|ms|us|ns|ps)\s*$")
_FLOPS_RE = re.compile(r"^\s*([0-9.]+)\s*([KMGTP])?FLOP/s\s*$")


class ConfigError(ValueError):
    """Configuration file is invalid; message names the offending key."""


def _scale(prefix: Optional[str]) -> int:
    if prefix is None or prefix == "":
        return 1
    if prefix in _BIN:
        return _BIN[prefix]
    return _DEC[prefix]


def parse_size(value, key: str) -> int:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, str):
        m = _SIZE_RE.match(value)
        if m:
            return round(float(m.group(1)) * _scale(m.group(2)))
    raise ConfigError(f"{key}: expected bytes or a size like '256 GB' / '4 KiB'")


def parse_rate(value, key: str) -> int:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, str):
        m = _RATE_RE.match(value)
        if m:
            return round(float(m.group(1)) * _scale(m.group(2)))
    raise ConfigError(f"{key}: expected bytes/s or a rate like '80 GB/s'")


def parse_time(value, key: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _TIME_RE.match(value)
        if m:
            return float(m.group(1)) * _TIME[m.group(2)]
    raise ConfigError(f"{key}: expected seconds or a time like '10 us'")


def parse_flops(value, key: str) -> int:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, str):
        m = _FLOPS_RE.match(value)
        if m:
            return round(float(m.group(1)) * _DEC[m.group(2) or ""])
    raise ConfigError(f"{key}: expected FLOP/s or a rate like '35.2 GFLOP/s'")


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}: unknown key")


def _tier(obj, name: str, defaults: dict) -> TierSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"system.{name}: expected an object")
    _check_keys(obj, {"capacity", "read_bandwidth", "write_bandwidth",
                      "access_latency"}, f"system.{name}")
    merged = dict(defaults)
    merged.update(obj)
    try:
        return TierSpec(
            name,
            parse_size(merged["capacity"], f"system.{name}.capacity"),
            parse_rate(merged["read_bandwidth"], f"system.{name}.read_bandwidth"),
            parse_rate(merged["write_bandwidth"], f"system.{name}.write_bandwidth"),
            parse_time(merged.get("access_latency", 0.0),
                       f"system.{name}.access_latency"),
        )
    except KeyError as exc:
        raise ConfigError(f"system.{name}.{exc.args[0]}: required") from exc
    except SpecError as exc:
        raise ConfigError(f"system.{name}: {exc}") from exc


_FAST_DEFAULTS = {"capacity": "256 GB", "read_bandwidth": "80 GB/s",
                  "write_bandwidth": "80 GB/s", "access_latency": 0.0}
_SLOW_DEFAULTS = {"capacity": "1280 GB", "read_bandwidth": "10 GB/s",
                  "write_bandwidth": "8 GB/s", "access_latency": "10 us"}


def parse_system(obj, numa_enabled: bool) -> SystemSpec:
    if not isinstance(obj, dict):
        raise ConfigError("system: expected an object")
    _check_keys(obj, {"fast", "slow", "page_size", "threads",
                      "per_core_compute", "numa", "reserved_fraction"}, "system")
    numa = None
    if numa_enabled:
        nobj = obj.get("numa")
        if nobj is None:
            raise ConfigError("system.numa: required when mode.numa is true")
        _check_keys(nobj, {"cross_link_bandwidth", "write_placement"}, "system.numa")
        try:
            numa = NumaSpec(
                parse_rate(nobj.get("cross_link_bandwidth", "10 GB/s"),
                           "system.numa.cross_link_bandwidth"),
                nobj.get("write_placement", "local"),
            )
        except SpecError as exc:
            raise ConfigError(f"system.numa: {exc}") from exc
    try:
        return SystemSpec(
            fast=_tier(obj.get("fast", {}), "fast", _FAST_DEFAULTS),
            slow=_tier(obj.get("slow", {}), "slow", _SLOW_DEFAULTS),
            page_size=parse_size(obj.get("page_size", 4096), "system.page_size"),
            threads=int(obj.get("threads", 44)),
            per_core_compute=parse_flops(obj.get("per_core_compute", "35.2 GFLOP/s"),
                                         "system.per_core_compute"),
            numa=numa,
            reserved_fraction=float(obj.get("reserved_fraction", 0.0)),
        )
    except SpecError as exc:
        raise ConfigError(f"system: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    system: SystemSpec
    family: str
    parameters: dict
    policy: str
    policy_k: int
    tiered: bool
    warmup: bool
    seed: int
    output: Optional[str]


@dataclass(frozen=True)
class SweepConfig:
    system: SystemSpec
    family: str
    footprint_ratios: tuple[float, ...]
    ai_params: tuple
    threads: int
    policy: str
    policy_k: int
    warmup: bool
    seed: int
    output: Optional[str]


def _parse_policy(obj) -> tuple[str, int]:
    if obj is None:
        return "none", 8
    _check_keys(obj, {"name", "k"}, "policy")
    name = obj.get("name", "none")
    if name not in ("none", "sequential", "stride"):
        raise ConfigError(f"policy.name: unknown policy {name!r}")
    k = int(obj.get("k", 8))
    return name, k


def _parse_mode(obj) -> dict:
    if obj is None:
        return {"tiered": True, "numa": False, "warmup": True}
    _check_keys(obj, {"tiered", "numa", "warmup"}, "mode")
    out = {"tiered": bool(obj.get("tiered", True)),
           "numa": bool(obj.get("numa", False)),
           "warmup": bool(obj.get("warmup", True))}
    return out


def load_run_config(path) -> RunConfig:
    raw = _load_json(path)
    _check_keys(raw, {"system", "workload", "policy", "mode", "seed", "output"},
                "config")
    mode = _parse_mode(raw.get("mode"))
    system = parse_system(raw.get("system", {}), mode["numa"])
    wl = raw.get("workload")
    if not isinstance(wl, dict):
        raise ConfigError("workload: required object")
    _check_keys(wl, {"family", "parameters"}, "workload")
    family = wl.get("family")
    if not family:
        raise ConfigError("workload.family: required")
    params = wl.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("workload.parameters: expected an object")
    policy, k = _parse_policy(raw.get("policy"))
    return RunConfig(
        system=system, family=family, parameters=dict(params),
        policy=policy, policy_k=k, tiered=mode["tiered"], warmup=mode["warmup"],
        seed=int(raw.get("seed", 0)), output=raw.get("output"),
    )


def load_sweep_config(path) -> SweepConfig:
    raw = _load_json(path)
    _check_keys(raw, {"system", "sweep", "policy", "mode", "seed", "output"},
                "config")
    mode = _parse_mode(raw.get("mode"))
    system = parse_system(raw.get("system", {}), mode["numa"])
    sw = raw.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("sweep: required object")
    _check_keys(sw, {"family", "footprint_ratios", "ai_params", "threads"}, "sweep")
    family = sw.get("family")
    if not family:
        raise ConfigError("sweep.family: required")
    ratios = sw.get("footprint_ratios")
    if not ratios or not isinstance(ratios, list):
        raise ConfigError("sweep.footprint_ratios: non-empty list required")
    ai_params = sw.get("ai_params", [None])
    if not isinstance(ai_params, list) or not ai_params:
        raise ConfigError("sweep.ai_params: non-empty list required")
    policy, k = _parse_policy(raw.get("policy"))
    return SweepConfig(
        system=system, family=family,
        footprint_ratios=tuple(float(r) for r in ratios),
        ai_params=tuple(ai_params), threads=int(sw.get("threads", 1)),
        policy=policy, policy_k=k, warmup=mode["warmup"],
        seed=int(raw.get("seed", 0)), output=raw.get("output"),
    )


def dump_run_config(cfg: RunConfig) -> dict:
    """JSON-ready form of a validated config; reloading it yields an
    equivalent RunConfig (quantities in base units)."""
    system = {
        "fast": {"capacity": cfg.system.fast.capacity,
                 "read_bandwidth": cfg.system.fast.read_bandwidth,
                 "write_bandwidth": cfg.system.fast.write_bandwidth,
                 "access_latency": cfg.system.fast.access_latency},
        "slow": {"capacity": cfg.system.slow.capacity,
                 "read_bandwidth": cfg.system.slow.read_bandwidth,
                 "write_bandwidth": cfg.system.slow.write_bandwidth,
                 "access_latency": cfg.system.slow.access_latency},
        "page_size": cfg.system.page_size,
        "threads": cfg.system.threads,
        "per_core_compute": cfg.system.per_core_compute,
        "reserved_fraction": cfg.system.reserved_fraction,
    }
    if cfg.system.numa is not None:
        system["numa"] = {
            "cross_link_bandwidth": cfg.system.numa.cross_link_bandwidth,
            "write_placement": cfg.system.numa.write_placement,
        }
    out = {
        "system": system,
        "workload": {"family": cfg.family, "parameters": cfg.parameters},
        "policy": {"name": cfg.policy, "k": cfg.policy_k},
        "mode": {"tiered": cfg.tiered, "numa": cfg.system.numa is not None,
                 "warmup": cfg.warmup},
        "seed": cfg.seed,
    }
    if cfg.output is not None:
        out["output"] = cfg.output
    return out


def load_bands(path) -> dict:
    raw = _load_json(path)
    _check_keys(raw, {"floor", "knee_ai", "threshold_ai", "workloads"}, "bands")
    out = {}
    for key in ("floor", "knee_ai", "threshold_ai"):
        if key in raw:
            lo, hi = raw[key]
            out[key] = (float(lo), float(hi))
    wl = raw.get("workloads", {})
    if not isinstance(wl, dict):
        raise ConfigError("bands.workloads: expected an object")
    out["workloads"] = {name: (float(b[0]), float(b[1])) for name, b in wl.items()}
    return out


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw
