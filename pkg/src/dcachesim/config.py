"""Experiment configuration.

Configs are flat text files, one ``section.key = value`` per line (``#``
starts a comment).  Unknown keys are rejected, and validation reports every
violation it finds rather than stopping at the first.  Values can also be
injected through the environment with the ``DCSIM_`` prefix, uppercased and
with ``__`` standing in for the dot (``DCSIM_GEOMETRY__CACHE_CAPACITY=...``),
and through explicit override mappings (the CLI's flags use that path).

Precedence: defaults < config file < environment < explicit overrides.
"""

from __future__ import annotations

import copy
import os

ENV_PREFIX = "DCSIM_"

DESIGNS = ("gemini", "lh", "direct")
WORKLOAD_CLASSES = ("cd", "ld", "bf", "nb")

# The default capacity is divisible by every design's set size (16, 14, and
# 1 way) so one config can drive a fair cross-design sweep.
DEFAULTS = {
    "design": "gemini",
    "seed": 1,
    "cpu_clock_mhz": 3200,
    "geometry": {
        "block_size": 64,
        "ways_per_set": 16,
        "cache_capacity": 3_670_016,
        "row_size": 2048,
        "tag_size": 4,
    },
    "cache_timing": {
        "tcas": 36, "trcd": 36, "trp": 36, "tras": 144,
        "channels": 4, "banks": 16,
        "bus_width_bits": 128, "bus_clock_mhz": 1600,
        "row_buffer_bytes": 2048,
    },
    "mem_timing": {
        "tcas": 36, "trcd": 36, "trp": 36, "tras": 144,
        "channels": 2, "banks": 8,
        "bus_width_bits": 64, "bus_clock_mhz": 800,
        "row_buffer_bytes": 2048,
    },
    "tag_cache": {"entries": 256, "assoc": 8, "hit_latency": 9},
    "policy": {"p_bypass": 0.0, "filter_enabled": True, "reservation_enabled": True},
    "workload": {
        "class": "ld",
        "trace": "",
        "records": 200_000,
        "seed": 1,
        "write_fraction": 0.2,
    },
    "output": {"path": "", "format": "json"},
}

LH_WAYS = 14

# key path -> coercion type; "?" marks keys with no default (class presets)
_SCHEMA = {
    "design": str, "seed": int, "cpu_clock_mhz": int,
    "geometry.block_size": int, "geometry.ways_per_set": int,
    "geometry.cache_capacity": int, "geometry.row_size": int,
    "geometry.tag_size": int,
    "tag_cache.entries": int, "tag_cache.assoc": int, "tag_cache.hit_latency": int,
    "policy.p_bypass": float, "policy.filter_enabled": bool,
    "policy.reservation_enabled": bool,
    "workload.class": str, "workload.trace": str, "workload.records": int,
    "workload.seed": int, "workload.write_fraction": float,
    "workload.working_set": int, "workload.burst": int,
    "workload.arrival_gap": float, "workload.spread": int,
    "workload.hot_fraction": float, "workload.hot_weight": float,
    "workload.reuse_distance": int, "workload.conflict_fraction": float,
    "workload.conflict_stride": int, "workload.conflict_burst": int,
    "workload.conflict_groups": int,
    "output.path": str, "output.format": str,
}
for _dev in ("cache_timing", "mem_timing"):
    for _k in ("tcas", "trcd", "trp", "tras", "channels", "banks",
               "bus_width_bits", "bus_clock_mhz", "row_buffer_bytes"):
        _SCHEMA[f"{_dev}.{_k}"] = int


class ConfigError(Exception):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def parse_config(text: str) -> dict:
    """Parse config text into a {key_path: raw_string} mapping."""
    raw = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    if errors:
        raise ConfigError(errors)
    return raw


def _coerce(key: str, value, errors: list):
    typ = _SCHEMA[key]
    if isinstance(value, typ) and not (typ is int and isinstance(value, bool)):
        return value
    text = str(value)
    try:
        if typ is bool:
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        return typ(text)
    except ValueError as exc:
        errors.append(f"{key}: {exc}")
        return None


def _set_path(cfg: dict, key: str, value):
    if "." in key:
        section, name = key.split(".", 1)
        cfg.setdefault(section, {})[name] = value
    else:
        cfg[key] = value


def _env_overrides(environ) -> dict:
    raw = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().replace("__", ".")
        raw[path] = value
    return raw


def build_config(raw: dict) -> tuple[dict, list]:
    """Merge raw key/value pairs over the defaults; returns (config, errors)."""
    cfg = copy.deepcopy(DEFAULTS)
    errors = []
    for key, value in raw.items():
        if key not in _SCHEMA:
            errors.append(f"unknown key {key!r}")
            continue
        coerced = _coerce(key, value, errors)
        if coerced is not None:
            _set_path(cfg, key, coerced)
    errors.extend(validate(cfg))
    return cfg, errors


def effective_ways(design: str, cfg: dict) -> int:
    if design == "lh":
        return LH_WAYS
    if design == "direct":
        return 1
    return cfg["geometry"]["ways_per_set"]


def validate(cfg: dict) -> list:
    """Semantic checks; returns every violation found (empty = valid)."""
    errors = []
    design = cfg.get("design")
    if design not in DESIGNS:
        errors.append(f"design: must be one of {DESIGNS}, got {design!r}")
    geom = cfg["geometry"]
    block = geom["block_size"]
    if block <= 0 or block & (block - 1):
        errors.append(f"geometry.block_size: must be a power of two, got {block}")
    if geom["ways_per_set"] < 1:
        errors.append("geometry.ways_per_set: must be >= 1")
    if geom["cache_capacity"] <= 0:
        errors.append("geometry.cache_capacity: must be positive")
    if geom["tag_size"] <= 0:
        errors.append("geometry.tag_size: must be positive")
    if design in DESIGNS and block > 0 and not block & (block - 1):
        ways = effective_ways(design, cfg)
        set_bytes = block * ways
        if geom["cache_capacity"] % set_bytes:
            errors.append(
                f"geometry.cache_capacity: {geom['cache_capacity']} not divisible "
                f"by the {design} set size {set_bytes}"
            )
        if ways > 1 and set_bytes > geom["row_size"]:
            errors.append(
                f"geometry.row_size: a {design} set ({set_bytes} B) must fit in "
                f"one row ({geom['row_size']} B)"
            )

    for dev in ("cache_timing", "mem_timing"):
        t = cfg[dev]
        for k in ("tcas", "trcd", "trp", "tras"):
            if t[k] <= 0:
                errors.append(f"{dev}.{k}: must be positive")
        if t["channels"] < 1 or t["banks"] < 1:
            errors.append(f"{dev}: needs at least one channel and one bank")
        if t["bus_width_bits"] % 8:
            errors.append(f"{dev}.bus_width_bits: must be a multiple of 8")
        if t["bus_clock_mhz"] <= 0 or cfg["cpu_clock_mhz"] % t["bus_clock_mhz"]:
            errors.append(
                f"{dev}.bus_clock_mhz: cpu clock {cfg['cpu_clock_mhz']} must be an "
                f"integer multiple of {t['bus_clock_mhz']}"
            )
        if t["row_buffer_bytes"] < block:
            errors.append(f"{dev}.row_buffer_bytes: must hold at least one block")

    tc = cfg["tag_cache"]
    if tc["entries"] < 1 or tc["assoc"] < 1:
        errors.append("tag_cache: entries and assoc must be positive")
    elif tc["entries"] % tc["assoc"]:
        errors.append(f"tag_cache.entries: {tc['entries']} not divisible by assoc {tc['assoc']}")
    else:
        sets = tc["entries"] // tc["assoc"]
        if sets & (sets - 1):
            errors.append(f"tag_cache: set count {sets} must be a power of two")
    if tc["hit_latency"] < 0:
        errors.append("tag_cache.hit_latency: must be nonnegative")

    pol = cfg["policy"]
    if not 0.0 <= pol["p_bypass"] <= 1.0:
        errors.append(f"policy.p_bypass: must be in [0, 1], got {pol['p_bypass']}")

    wl = cfg["workload"]
    if wl["class"] not in WORKLOAD_CLASSES:
        errors.append(f"workload.class: must be one of {WORKLOAD_CLASSES}, got {wl['class']!r}")
    if wl["records"] < 1:
        errors.append("workload.records: must be positive")
    if not 0.0 <= wl["write_fraction"] < 1.0:
        errors.append("workload.write_fraction: must be in [0, 1)")

    if cfg["output"]["format"] not in ("json", "csv"):
        errors.append(f"output.format: must be json or csv, got {cfg['output']['format']!r}")
    return errors


def load_config(path: str | None = None, overrides: dict | None = None,
                environ=None) -> dict:
    """Assemble the effective config; raises ConfigError with all problems."""
    raw = {}
    if path is not None:
        with open(path) as fh:
            raw.update(parse_config(fh.read()))
    raw.update(_env_overrides(os.environ if environ is None else environ))
    if overrides:
        raw.update(overrides)
    cfg, errors = build_config(raw)
    if errors:
        raise ConfigError(errors)
    return cfg


def config_lines(cfg: dict) -> list:
    """Flatten a config back to 'key = value' lines (stable order)."""
    out = []
    for key in sorted(_SCHEMA):
        section, _, name = key.partition(".")
        if not name:
            if key in cfg:
                out.append(f"{key} = {cfg[key]}")
            continue
        sect = cfg.get(section, {})
        if name in sect:
            out.append(f"{key} = {sect[name]}")
    return out
