"""Scenario configuration: dataclasses plus a flat dotted-key TOML file format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib as tomli
except ModuleNotFoundError:  # python < 3.11
    import tomli

from .metrics import MosCurve
from .video import ContentParams

ARCHITECTURES = ("non_adaptive", "adaptive", "cross")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AdmissionSettings:
    beta: float = 0.9
    theta: float = 3.5
    max_sessions: int = 24
    window_s: float = 5.0
    # gate used by the non-adaptive and adaptive arms
    baseline: str = "always_admit"

    def __post_init__(self) -> None:
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not 1 <= self.theta <= 5:
            raise ValueError(f"theta must be in [1, 5], got {self.theta}")
        if self.max_sessions < 0:
            raise ValueError("max_sessions must be >= 0")
        if self.window_s <= 0:
            raise ValueError("window_s must be positive")
        if self.baseline not in ("bandwidth_check", "always_admit"):
            raise ValueError(f"baseline must be bandwidth_check or always_admit, got {self.baseline!r}")


@dataclass(frozen=True)
class AdaptationSettings:
    policy: str = "tfrc"
    report_interval_s: float = 1.0
    packet_size: int = 1052

    def __post_init__(self) -> None:
        if self.policy not in ("tfrc", "aimd"):
            raise ValueError(f"policy must be tfrc or aimd, got {self.policy!r}")
        if self.report_interval_s <= 0 or self.packet_size <= 0:
            raise ValueError("report_interval_s and packet_size must be positive")


@dataclass(frozen=True)
class ArrivalSettings:
    process: str = "per_slot"
    slot_s: float = 1.0

    def __post_init__(self) -> None:
        if self.process not in ("per_slot", "poisson"):
            raise ValueError(f"process must be per_slot or poisson, got {self.process!r}")
        if self.slot_s <= 0:
            raise ValueError("slot_s must be positive")


@dataclass(frozen=True)
class MetricSettings:
    delta: float = 0.75
    jitter: str = "mean_abs"

    def __post_init__(self) -> None:
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must be in [0, 1]")
        if self.jitter not in ("mean_abs", "rtp"):
            raise ValueError(f"jitter must be mean_abs or rtp, got {self.jitter!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    architecture: str = "cross"
    seed: int = 1
    capacity_bps: int = 7_000_000
    queue_capacity: int = 2000
    horizon_s: float = 500.0
    bottleneck_delay_s: float = 0.010
    access_bps: int = 100_000_000
    access_delay_s: float = 0.001
    n_video: int = 24
    n_ftp: int = 24
    ftp_stagger_s: float = 0.1
    ftp_window: int = 0
    content: ContentParams = field(default_factory=ContentParams)
    mos: MosCurve = field(default_factory=MosCurve)
    admission: AdmissionSettings = field(default_factory=AdmissionSettings)
    adaptation: AdaptationSettings = field(default_factory=AdaptationSettings)
    arrivals: ArrivalSettings = field(default_factory=ArrivalSettings)
    metrics: MetricSettings = field(default_factory=MetricSettings)

    def __post_init__(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        for name in ("capacity_bps", "access_bps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.queue_capacity < 0:
            raise ValueError(f"queue_capacity must be >= 0, got {self.queue_capacity}")
        if self.horizon_s <= 0:
            raise ValueError("horizon_s must be positive")
        for name in ("bottleneck_delay_s", "access_delay_s", "ftp_stagger_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_video < 0 or self.n_ftp < 0:
            raise ValueError("source counts must be >= 0")

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _coerce(value, typ, key: str):
    if typ in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return value
    if typ in ("int", int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if typ in ("str", str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported field type {typ!r}")


def from_dict(data: dict, cls=ScenarioConfig, prefix: str = ""):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        dotted = prefix + key
        if key not in fields:
            raise ConfigError(f"{dotted}: unknown key")
        f = fields[key]
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted}: expected a section")
            kwargs[key] = from_dict(value, sub, dotted + ".")
        else:
            kwargs[key] = _coerce(value, f.type, dotted)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{prefix.rstrip('.') or '<root>'}: {exc}") from exc


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    return from_dict(data)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return loads(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flatten(cfg, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if dataclasses.is_dataclass(v):
            out.extend(flatten(v, prefix + f.name + "."))
        else:
            out.append((prefix + f.name, v))
    return out


def dumps(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in flatten(cfg))


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(cfg))
