"""Scenario configuration: schema, YAML loading and serialization."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Annotated, Any, List, Literal, Optional, Union

import yaml
from pydantic import (BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat,
                      PositiveInt, ValidationError, model_validator)

HOSTS = ("s1", "s2", "s3")
SINKS = ("d1", "d2")
Host = Literal["s1", "s2", "s3"]
Sink = Literal["d1", "d2"]
MarkerType = Literal["tb", "pam", "fsam", "tsw2cm"]


class ConfigError(ValueError):
    """Invalid scenario; ``errors`` lists one message per offending field."""

    def __init__(self, errors: List[str], source: str = "config"):
        self.errors = errors
        super().__init__("%s: %d error(s)\n  %s" % (source, len(errors), "\n  ".join(errors)))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class LinkCfg(_Model):
    bandwidth_bps: PositiveFloat
    delay_s: NonNegativeFloat = 0.005


class LinksCfg(_Model):
    access: LinkCfg = LinkCfg(bandwidth_bps=10e6)
    core: LinkCfg = LinkCfg(bandwidth_bps=10e6)
    bottleneck: LinkCfg = LinkCfg(bandwidth_bps=5e6)
    egress: LinkCfg = LinkCfg(bandwidth_bps=10e6)


class RedCfg(_Model):
    min_th: NonNegativeFloat
    max_th: PositiveFloat
    max_p: float = Field(gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _order(self):
        if self.min_th >= self.max_th:
            raise ValueError("min_th must be below max_th")
        return self


class QueueCfg(_Model):
    discipline: Literal["droptail", "red", "rio"] = "droptail"
    capacity: PositiveInt = 100
    ewma_weight: float = Field(0.002, gt=0.0, le=1.0)
    red: RedCfg = RedCfg(min_th=10, max_th=30, max_p=0.1)
    rio_in: RedCfg = RedCfg(min_th=40, max_th=70, max_p=0.02)
    rio_out: RedCfg = RedCfg(min_th=10, max_th=30, max_p=0.5)

    @model_validator(mode="after")
    def _fits(self):
        curves = {"droptail": (), "red": ("red",), "rio": ("rio_in", "rio_out")}
        for name in curves[self.discipline]:
            if getattr(self, name).max_th > self.capacity:
                raise ValueError("%s.max_th exceeds capacity %d" % (name, self.capacity))
        return self


class TopologyCfg(_Model):
    links: LinksCfg = LinksCfg()
    edge_queue: QueueCfg = QueueCfg(discipline="droptail", capacity=1000)
    core_queue: QueueCfg = QueueCfg(discipline="rio", capacity=100)


class PamCfg(_Model):
    min_th_frac: float = Field(0.1, ge=0.0, lt=1.0)
    max_th_frac: float = Field(0.9, gt=0.0, le=1.0)
    p_max: float = Field(1.0, ge=0.0, le=1.0)
    p_min: float = Field(0.0, ge=0.0, le=1.0)
    instantaneous: bool = False

    @model_validator(mode="after")
    def _order(self):
        if self.min_th_frac >= self.max_th_frac:
            raise ValueError("min_th_frac must be below max_th_frac")
        if self.p_min > self.p_max:
            raise ValueError("p_min must not exceed p_max")
        return self


class FsamCfg(_Model):
    k_est_seconds: PositiveFloat = 0.1
    k_c_seconds: PositiveFloat = 0.2
    alpha_clamp_factor: float = Field(2.0, ge=1.0)


class TswCfg(_Model):
    win_length_s: PositiveFloat = 1.0


class MarkerCfg(_Model):
    type: MarkerType = "tb"
    cir_bps: PositiveFloat = 1e6
    burst_bytes: PositiveFloat = 62500
    ewma_weight: float = Field(0.002, gt=0.0, le=1.0)
    pam: PamCfg = PamCfg()
    fsam: FsamCfg = FsamCfg()
    tsw2cm: TswCfg = TswCfg()


class TcpBulkCfg(_Model):
    type: Literal["tcp_bulk"] = "tcp_bulk"
    host: Host = "s1"
    sink: Sink = "d1"
    count: PositiveInt = 1
    start: NonNegativeFloat = 0.0
    start_jitter: NonNegativeFloat = 1.0
    stop: Optional[PositiveFloat] = None
    mss: PositiveInt = 1000
    background: bool = False


class TcpShortCfg(_Model):
    type: Literal["tcp_short"] = "tcp_short"
    host: Host = "s1"
    sink: Sink = "d1"
    mean_interarrival_s: PositiveFloat = 1.0
    payload_bytes: PositiveInt = 20480
    start: NonNegativeFloat = 0.0
    stop: Optional[PositiveFloat] = None
    mss: PositiveInt = 1000


class UdpCbrCfg(_Model):
    type: Literal["udp_cbr"] = "udp_cbr"
    host: Host = "s2"
    sink: Sink = "d1"
    rate_bps: PositiveFloat
    pkt_size: PositiveInt = 1000
    count: PositiveInt = 1
    start: NonNegativeFloat = 0.0
    start_jitter: NonNegativeFloat = 1.0
    stop: Optional[PositiveFloat] = None


SourceCfg = Annotated[Union[TcpBulkCfg, TcpShortCfg, UdpCbrCfg], Field(discriminator="type")]


class MetricsCfg(_Model):
    warmup_fraction: float = Field(0.1, ge=0.0, lt=1.0)


class ScenarioConfig(_Model):
    name: str = Field(min_length=1)
    duration: PositiveFloat = 40.0
    seed: int = Field(1, ge=0)
    replications: PositiveInt = 1
    markers: List[MarkerType] = Field(default_factory=lambda: ["tb", "pam", "fsam"], min_length=1)
    topology: TopologyCfg = TopologyCfg()
    marker: MarkerCfg = MarkerCfg()
    sources: List[SourceCfg] = Field(min_length=1)
    metrics: MetricsCfg = MetricsCfg()

    @model_validator(mode="after")
    def _times(self):
        for i, src in enumerate(self.sources):
            if src.stop is not None and src.stop <= src.start:
                raise ValueError("sources.%d: stop must be after start" % i)
        return self

    @property
    def warmup(self) -> float:
        return self.duration * self.metrics.warmup_fraction

    def with_marker(self, marker: str) -> "ScenarioConfig":
        data = self.to_dict()
        data["marker"]["type"] = marker
        return ScenarioConfig.model_validate(data)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def _format_errors(exc: ValidationError) -> List[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append("%s: %s" % (loc, err["msg"]))
    return out


def parse_config(data: Any, source: str = "config") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a mapping"], source)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc), source) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(["cannot read %s: %s" % (path, exc.strerror)], str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(["YAML syntax: %s" % exc], str(path)) from None
    return parse_config(data, str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def _split_path(path: str) -> List[Union[str, int]]:
    parts: List[Union[str, int]] = []
    for tok in path.split("."):
        if not tok:
            raise ValueError("empty component in parameter path %r" % path)
        parts.append(int(tok) if tok.isdigit() else tok)
    return parts


def resolve_param(cfg: ScenarioConfig, path: str) -> Any:
    node: Any = cfg.to_dict()
    for part in _split_path(path):
        try:
            node = node[part]
        except (KeyError, IndexError, TypeError):
            raise ValueError("parameter path %r does not resolve (at %r)" % (path, part)) from None
    return node


def set_param(cfg: ScenarioConfig, path: str, value: Any) -> ScenarioConfig:
    """Copy of ``cfg`` with the numeric field at ``path`` replaced."""
    current = resolve_param(cfg, path)
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ValueError("parameter %r is not numeric (found %r)" % (path, current))
    data = copy.deepcopy(cfg.to_dict())
    parts = _split_path(path)
    node = data
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value
    return parse_config(data, "sweep %s=%r" % (path, value))
