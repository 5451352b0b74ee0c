"""Gateway configuration: JSON document, env override, invariant checks."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

from ..btlink import SPP_UUID, normalize_mac, normalize_uuid

CONFIG_ENV = "HOMELINK_CONFIG"

DEVICE_NAMES = ("entry", "automation", "car")

DEFAULT_CONFIG = {
    "data_dir": "homelink-data",
    "host": "127.0.0.1",
    "raw_port": 7070,
    "json_port": 7071,
    "realtime": True,
    "mains_freq_hz": 50.0,
    "pulse_ms": 300,
    "discovery_ms": 12000,
    "sms": {"owner": "+15550100", "police": "+15550911"},
    "app_login": {"username": "admin", "password": "admin123"},
    "passwords": {
        "door_bt_enable": "4321",
        "door_lock": "door-pass",
        "car_lock": "car-lock-pass",
        "car_unlock": "car-unlock-pass",
        "reset_code": "777000",
    },
    "devices": {
        "entry": {"mac": "AA:BB:CC:00:00:01", "name": "entry door", "uuid": SPP_UUID},
        "automation": {"mac": "AA:BB:CC:00:00:02", "name": "room automation", "uuid": SPP_UUID},
        "car": {"mac": "AA:BB:CC:00:00:03", "name": "car lock", "uuid": SPP_UUID},
    },
}


class ConfigError(ValueError):
    """Named invariant violation found while validating a config."""


@dataclass(frozen=True)
class DeviceEntry:
    mac: str
    name: str
    uuid: str


@dataclass(frozen=True)
class GatewayConfig:
    data_dir: str
    host: str
    raw_port: int
    json_port: int
    realtime: bool
    mains_freq_hz: float
    pulse_ms: int
    discovery_ms: int
    sms_owner: str
    sms_police: str
    app_username: str
    app_password: str
    passwords: dict[str, str]
    devices: dict[str, DeviceEntry]

    @staticmethod
    def from_dict(raw: dict) -> "GatewayConfig":
        merged = _deep_merge(copy.deepcopy(DEFAULT_CONFIG), raw)
        sms = merged["sms"]
        if sms["owner"] == sms["police"]:
            raise ConfigError("sms.owner and sms.police must be different recipients")
        if merged["pulse_ms"] <= 0:
            raise ConfigError("pulse_ms must be positive")
        if merged["mains_freq_hz"] <= 0:
            raise ConfigError("mains_freq_hz must be positive")

        devices = {}
        for name in DEVICE_NAMES:
            if name not in merged["devices"]:
                raise ConfigError(f"devices.{name} is required")
            entry = merged["devices"][name]
            try:
                devices[name] = DeviceEntry(
                    mac=normalize_mac(entry["mac"]),
                    name=entry["name"],
                    uuid=normalize_uuid(entry.get("uuid", SPP_UUID)),
                )
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"devices.{name}: {exc}") from exc
        extra = set(merged["devices"]) - set(DEVICE_NAMES)
        if extra:
            raise ConfigError(f"unknown device classes: {sorted(extra)}")
        macs = [d.mac for d in devices.values()]
        if len(set(macs)) != len(macs):
            raise ConfigError("device MAC addresses must be unique")

        passwords = dict(merged["passwords"])
        for purpose, value in passwords.items():
            if not value or len(value) > 16 or not all(32 <= ord(c) < 127 for c in value):
                raise ConfigError(f"passwords.{purpose} must be 1..16 printable ASCII characters")

        return GatewayConfig(
            data_dir=merged["data_dir"],
            host=merged["host"],
            raw_port=int(merged["raw_port"]),
            json_port=int(merged["json_port"]),
            realtime=bool(merged["realtime"]),
            mains_freq_hz=float(merged["mains_freq_hz"]),
            pulse_ms=int(merged["pulse_ms"]),
            discovery_ms=int(merged["discovery_ms"]),
            sms_owner=sms["owner"],
            sms_police=sms["police"],
            app_username=merged["app_login"]["username"],
            app_password=merged["app_login"]["password"],
            passwords=passwords,
            devices=devices,
        )


def _deep_merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path: str | None = None) -> GatewayConfig:
    """Load from path, else $HOMELINK_CONFIG, else built-in defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if path is None:
        return GatewayConfig.from_dict({})
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return GatewayConfig.from_dict(raw)
