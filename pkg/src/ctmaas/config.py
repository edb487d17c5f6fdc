"""Platform configuration: one TOML (or JSON) file covers every module."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class GeomessengerConfig:
    congestion_onset_ratio: float = 0.4
    congestion_clear_ratio: float = 0.6
    min_vehicles: int = 3
    window_s: float = 60.0
    repeat_s: float = 10.0
    advisory_validity_s: float = 120.0
    congestion_zone_radius_m: float = 500.0
    stale_clear_s: float = 120.0


@dataclass
class FleetConfig:
    arrival_radius_m: float = 30.0
    reroute_min_saving_s: float = 60.0
    reroute_min_saving_frac: float = 0.10
    auto_apply: bool = False
    reroute_check_s: float = 5.0
    proposal_ttl_s: float = 120.0


@dataclass
class SignalConfig:
    max_extension_s: float = 15.0
    glosa_min_speed_ms: float = 2.0


@dataclass
class BrokerConfig:
    cam_zone_radius_m: float = 1000.0


@dataclass
class AuthConfig:
    token_ttl_s: float = 3600.0
    secret: str = "dev-secret-change-me"
    users: list = field(default_factory=list)  # [{user_id, display_name, role, password}]


@dataclass
class PersistenceConfig:
    log_path: str = "ctmaas.log.ndjson"
    snapshot_path: str = "ctmaas.snapshot.json"


@dataclass
class PlatformConfig:
    geomessenger: GeomessengerConfig = field(default_factory=GeomessengerConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    signals: SignalConfig = field(default_factory=SignalConfig)
    broker: BrokerConfig = field(default_factory=BrokerConfig)
    auth: AuthConfig = field(default_factory=AuthConfig)
    persistence: PersistenceConfig = field(default_factory=PersistenceConfig)

    @classmethod
    def from_dict(cls, doc: dict) -> "PlatformConfig":
        cfg = cls()
        for section_name, section in (
            ("geomessenger", cfg.geomessenger),
            ("fleet", cfg.fleet),
            ("signals", cfg.signals),
            ("broker", cfg.broker),
            ("auth", cfg.auth),
            ("persistence", cfg.persistence),
        ):
            for key, value in doc.get(section_name, {}).items():
                if not hasattr(section, key):
                    raise ValueError(f"unknown config key {section_name}.{key}")
                setattr(section, key, value)
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformConfig":
        path = Path(path)
        if path.suffix == ".json":
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        with path.open("rb") as fh:
            return cls.from_dict(tomllib.load(fh))
