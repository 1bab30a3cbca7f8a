"""Scenario configuration and the flat ``key=value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised for malformed or out-of-domain scenario settings."""


@dataclass(frozen=True)
class WireSizes:
    """Header sizes in bytes; list-carrying messages add ``per_entry`` per element."""

    hello: int = 12
    hello_reply: int = 12
    new_janitor: int = 16
    alive_request: int = 12
    alive_reply: int = 12
    data_header: int = 20
    ack: int = 16
    route_query: int = 24
    route_reply: int = 24
    route_error: int = 28
    route_unreachable: int = 16
    flood_request: int = 24
    flood_reply: int = 24
    flood_data_header: int = 20
    flood_error: int = 28
    per_entry: int = 4


@dataclass(frozen=True)
class ScenarioConfig:
    field_width: float = 1300.0
    field_height: float = 1300.0
    node_count: int = 50
    tx_range: float = 250.0
    speed_min: float = 1.0
    speed_max: float = 20.0
    pause_time: float = 0.0
    traffic_rate: float = 1.0
    mobility_rate: float = 0.1
    sim_duration: float = 900.0
    hop_limit: int = 16
    timer_alive: float = 15.0
    timer_janitor_idle: float = 30.0
    hop_latency: float = 0.002
    rng_seed: int = 1
    flow_count: int = 10
    # knobs below are not part of the core experiment description but are
    # exposed so every constant the protocols use lives in one place
    graph_tick: float = 1.0
    payload_bytes: int = 64
    hello_wait: float = 0.02
    query_timeout: float = 2.0
    request_timeout: float = 2.0
    request_retries: int = 2
    pending_cap: int = 64
    max_salvage: int = 3
    relay_wait: float = 0.005
    cache_reply_ttl: float = 0.0
    static: bool = False
    sizes: WireSizes = field(default_factory=WireSizes)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not (self.field_width > 0 and self.field_height > 0):
            raise ConfigError("field dimensions must be positive")
        if self.tx_range <= 0:
            raise ConfigError("tx_range must be positive")
        if self.node_count < 2:
            raise ConfigError("node_count must be at least 2")
        if not 0 <= self.speed_min <= self.speed_max:
            raise ConfigError("need 0 <= speed_min <= speed_max")
        if not self.static and self.speed_max <= 0:
            raise ConfigError("mobile scenario needs speed_max > 0")
        if self.pause_time < 0:
            raise ConfigError("pause_time must be nonnegative")
        if self.hop_limit < 1:
            raise ConfigError("hop_limit must be >= 1")
        if self.traffic_rate < 0 or self.mobility_rate < 0:
            raise ConfigError("rates must be nonnegative")
        if self.flow_count < 0:
            raise ConfigError("flow_count must be nonnegative")
        if self.sim_duration < 0:
            raise ConfigError("sim_duration must be nonnegative")
        if self.hop_latency <= 0 or self.graph_tick <= 0:
            raise ConfigError("hop_latency and graph_tick must be positive")
        if self.timer_alive <= 0 or self.timer_janitor_idle <= 0:
            raise ConfigError("timers must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must fit in 64 unsigned bits")
        if self.relay_wait < 0 or self.cache_reply_ttl < 0:
            raise ConfigError("relay_wait and cache_reply_ttl must be nonnegative")
        if self.pending_cap < 1:
            raise ConfigError("pending_cap must be >= 1")

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_SIZE_PREFIX = "size_"


def _coerce(name: str, raw: str, kind: type) -> Any:
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from exc


def _field_types(cls: type) -> dict[str, type]:
    types = {"float": float, "int": int, "bool": bool}
    out = {}
    for f in fields(cls):
        if f.name == "sizes":
            continue
        out[f.name] = types[f.type if isinstance(f.type, str) else f.type.__name__]
    return out


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key=value`` lines; ``#`` starts a comment, unknown keys are errors.

    Wire sizes are overridden with ``size_<name>`` keys, e.g. ``size_hello=16``.
    """
    base = base or ScenarioConfig()
    scen_types = _field_types(ScenarioConfig)
    size_types = _field_types(WireSizes)
    scen: dict[str, Any] = {}
    sizes: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in scen_types:
            scen[key] = _coerce(key, value, scen_types[key])
        elif key.startswith(_SIZE_PREFIX) and key[len(_SIZE_PREFIX):] in size_types:
            name = key[len(_SIZE_PREFIX):]
            sizes[name] = _coerce(key, value, size_types[name])
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if sizes:
        scen["sizes"] = dataclasses.replace(base.sizes, **sizes)
    return dataclasses.replace(base, **scen)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def dump_config(config: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        if f.name == "sizes":
            continue
        lines.append(f"{f.name}={getattr(config, f.name)}")
    default_sizes = WireSizes()
    for f in fields(WireSizes):
        value = getattr(config.sizes, f.name)
        if value != getattr(default_sizes, f.name):
            lines.append(f"{_SIZE_PREFIX}{f.name}={value}")
    return "\n".join(lines) + "\n"
