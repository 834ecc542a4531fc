"""Shared domain types, validation, and threshold configuration.

Everything here is an immutable value object; instances can be shared
freely between threads without coordination.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any


class ValidationError(ValueError):
    """A sample field fell outside its allowed range.

    Carries the first violated field, the offending value, and the
    allowed range so callers can produce machine-readable rejects.
    """

    def __init__(self, field_name: str, value: Any, allowed: str):
        self.field = field_name
        self.value = value
        self.allowed = allowed
        super().__init__(f"{field_name}={value!r} outside {allowed}")


class Condition(Enum):
    """Binary water condition; Good encodes to 1.0, Bad to 0.0."""

    GOOD = "Good"
    BAD = "Bad"

    def to_value(self) -> float:
        return 1.0 if self is Condition.GOOD else 0.0

    @classmethod
    def from_value(cls, value: float) -> "Condition":
        # Ties go to Good; keep in sync with tree prediction thresholding.
        return cls.GOOD if value >= 0.5 else cls.BAD


class ActuatorId(Enum):
    OXYGEN_PUMP = "oxygen_pump"
    COOLING_FAN = "cooling_fan"
    HEATER = "heater"
    WATER_FILTER = "water_filter"
    ACID_DOSER = "acid_doser"
    BASE_DOSER = "base_doser"

    @classmethod
    def from_wire(cls, name: str) -> "ActuatorId":
        for actuator in cls:
            if actuator.value == name:
                return actuator
        raise KeyError(name)


class ActuatorMode(Enum):
    AUTO = "auto"
    FORCED_ON = "on"
    FORCED_OFF = "off"


# Sensor envelope. The temperature probe's datasheet range is -55..125 C;
# readings outside it are sensor faults, not water states.
TEMP_MIN_C = -55.0
TEMP_MAX_C = 125.0
MAX_DEVICE_ID_LEN = 64

SAMPLE_FIELDS = ("device_id", "ts", "temp_c", "ph", "tds_mg_l", "ec_us_cm", "nh3_ppm")


@dataclass(frozen=True)
class WaterSample:
    """One timestamped multi-sensor reading.

    ``ts`` is epoch UTC milliseconds. ``tds_mg_l`` doubles as the
    turbidity figure used by the rule engine (the two are conflated in
    this system's telemetry).
    """

    device_id: str
    ts: int
    temp_c: float
    ph: float
    tds_mg_l: float
    ec_us_cm: float
    nh3_ppm: float

    def features(self) -> tuple[float, float, float]:
        """Classifier feature triple (temperature, pH, TDS)."""
        return (self.temp_c, self.ph, self.tds_mg_l)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "device_id": self.device_id,
            "ts": self.ts,
            "temp_c": self.temp_c,
            "ph": self.ph,
            "tds_mg_l": self.tds_mg_l,
            "ec_us_cm": self.ec_us_cm,
            "nh3_ppm": self.nh3_ppm,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "WaterSample":
        """Strict wire parser; raises ValueError on missing/mistyped fields."""
        if not isinstance(data, dict):
            raise ValueError("sample must be a JSON object")
        for key in SAMPLE_FIELDS:
            if key not in data:
                raise ValueError(f"missing field {key}")
        device_id = data["device_id"]
        if not isinstance(device_id, str):
            raise ValueError("device_id must be a string")
        ts = data["ts"]
        if isinstance(ts, bool) or not isinstance(ts, int):
            raise ValueError("ts must be an integer (epoch ms)")
        numerics = {}
        for key in ("temp_c", "ph", "tds_mg_l", "ec_us_cm", "nh3_ppm"):
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{key} must be a number")
            numerics[key] = float(value)
        return cls(device_id=device_id, ts=ts, **numerics)


def _is_finite_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_sample(raw: WaterSample) -> WaterSample:
    """Return ``raw`` unchanged iff every field invariant holds.

    Checks fields in declaration order and raises ``ValidationError``
    for the first violation found.
    """
    if not isinstance(raw.device_id, str) or not raw.device_id or len(raw.device_id) > MAX_DEVICE_ID_LEN:
        raise ValidationError("device_id", raw.device_id, f"non-empty string of <= {MAX_DEVICE_ID_LEN} chars")
    if not _is_finite_number(raw.ts):
        raise ValidationError("ts", raw.ts, "finite epoch milliseconds")
    if not (_is_finite_number(raw.temp_c) and TEMP_MIN_C <= raw.temp_c <= TEMP_MAX_C):
        raise ValidationError("temp_c", raw.temp_c, f"[{TEMP_MIN_C}, {TEMP_MAX_C}]")
    if not (_is_finite_number(raw.ph) and 0.0 <= raw.ph <= 14.0):
        raise ValidationError("ph", raw.ph, "[0, 14]")
    if not (_is_finite_number(raw.tds_mg_l) and raw.tds_mg_l >= 0.0):
        raise ValidationError("tds_mg_l", raw.tds_mg_l, ">= 0")
    if not (_is_finite_number(raw.ec_us_cm) and raw.ec_us_cm >= 0.0):
        raise ValidationError("ec_us_cm", raw.ec_us_cm, ">= 0")
    if not (_is_finite_number(raw.nh3_ppm) and raw.nh3_ppm >= 0.0):
        raise ValidationError("nh3_ppm", raw.nh3_ppm, ">= 0")
    return raw


@dataclass(frozen=True)
class Thresholds:
    """One (lo, hi) band per classifier feature."""

    temp_lo: float
    temp_hi: float
    ph_lo: float
    ph_hi: float
    turb_lo: float
    turb_hi: float

    def __post_init__(self):
        for lo_name, hi_name in (("temp_lo", "temp_hi"), ("ph_lo", "ph_hi"), ("turb_lo", "turb_hi")):
            lo = getattr(self, lo_name)
            hi = getattr(self, hi_name)
            if not (_is_finite_number(lo) and _is_finite_number(hi)):
                raise ValueError(f"{lo_name}/{hi_name} must be finite")
            if not lo < hi:
                raise ValueError(f"{lo_name}={lo} must be < {hi_name}={hi}")

    def to_json_dict(self) -> dict[str, float]:
        return {
            "temp_lo": self.temp_lo,
            "temp_hi": self.temp_hi,
            "ph_lo": self.ph_lo,
            "ph_hi": self.ph_hi,
            "turb_lo": self.turb_lo,
            "turb_hi": self.turb_hi,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Thresholds":
        return cls(**{k: float(data[k]) for k in ("temp_lo", "temp_hi", "ph_lo", "ph_hi", "turb_lo", "turb_hi")})


# Two distinct threshold sets exist by design and must not be merged:
# the dataset-labeling bands and the (stricter-in-places) rule-engine
# trigger bands. Their disagreement on pH and turbidity is deliberate.
LABELING_DEFAULTS = Thresholds(temp_lo=24.0, temp_hi=30.0, ph_lo=6.0, ph_hi=9.0, turb_lo=1200.0, turb_hi=1800.0)
CONTROL_DEFAULTS = Thresholds(temp_lo=24.0, temp_hi=30.0, ph_lo=6.5, ph_hi=9.0, turb_lo=1100.0, turb_hi=1800.0)

DEFAULT_TICK_MS = 500
DEFAULT_STORE_PATH = "telemetry.jsonl"
DEFAULT_LISTEN_ADDR = "127.0.0.1:8765"


@dataclass(frozen=True)
class ActuatorState:
    """Mode plus the effective on/off the plant actually sees."""

    id: ActuatorId
    mode: ActuatorMode
    effective: bool
    last_changed: int

    def __post_init__(self):
        if self.mode is ActuatorMode.FORCED_ON and not self.effective:
            raise ValueError("forced-on actuator must be effective")
        if self.mode is ActuatorMode.FORCED_OFF and self.effective:
            raise ValueError("forced-off actuator cannot be effective")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id.value,
            "mode": self.mode.value,
            "effective": self.effective,
            "last_changed": self.last_changed,
        }


def initial_actuator_states(now_ms: int = 0) -> list[ActuatorState]:
    """All actuators in Auto, off."""
    return [ActuatorState(a, ActuatorMode.AUTO, False, now_ms) for a in ActuatorId]


@dataclass(frozen=True)
class AppConfig:
    labeling_thresholds: Thresholds = LABELING_DEFAULTS
    control_thresholds: Thresholds = CONTROL_DEFAULTS
    tick_ms: int = DEFAULT_TICK_MS
    store_path: str = DEFAULT_STORE_PATH
    listen_addr: str = DEFAULT_LISTEN_ADDR


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> AppConfig:
    """Build an AppConfig from a JSON file, filling gaps with defaults.

    ``FLOC_CONFIG`` points at the file when ``path`` is not given;
    ``FLOC_LISTEN`` overrides the listen address either way.
    """
    env = os.environ if env is None else env
    if path is None:
        path = env.get("FLOC_CONFIG") or None

    cfg = AppConfig()
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("config root must be a JSON object")
        kwargs: dict[str, Any] = {}
        if "labeling_thresholds" in data:
            kwargs["labeling_thresholds"] = Thresholds.from_json_dict(data["labeling_thresholds"])
        if "control_thresholds" in data:
            kwargs["control_thresholds"] = Thresholds.from_json_dict(data["control_thresholds"])
        if "tick_ms" in data:
            kwargs["tick_ms"] = int(data["tick_ms"])
        if "store_path" in data:
            kwargs["store_path"] = str(data["store_path"])
        if "listen_addr" in data:
            kwargs["listen_addr"] = str(data["listen_addr"])
        cfg = replace(cfg, **kwargs)

    listen_override = env.get("FLOC_LISTEN")
    if listen_override:
        cfg = replace(cfg, listen_addr=listen_override)
    return cfg


def parse_listen_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port:
        raise ValueError(f"listen address must be host:port, got {addr!r}")
    return host, int(port)
