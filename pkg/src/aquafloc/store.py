"""Append-only JSONL time-series store for water samples.

One writer, many readers. Every accepted append is flushed to the log
before the sequence number is returned, and recovery tolerates a torn
final line (the usual crash artifact of an append-only log).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .model import WaterSample


class NoData(LookupError):
    """Query against an empty store."""


class InvalidRange(ValueError):
    """range() called with from_ts > to_ts."""


class OutOfOrder(ValueError):
    """Sample timestamp does not advance its device's stream."""

    def __init__(self, device_id: str, ts: int):
        self.device_id = device_id
        self.ts = ts
        super().__init__(f"ts {ts} does not advance device {device_id!r}")


@dataclass(frozen=True)
class StoredRecord:
    seq: int
    sample: WaterSample

    def to_json_dict(self) -> dict[str, Any]:
        # Key order is the log format; downstream tools match on it.
        return {
            "seq": self.seq,
            "device_id": self.sample.device_id,
            "ts": self.sample.ts,
            "temp_c": self.sample.temp_c,
            "ph": self.sample.ph,
            "tds_mg_l": self.sample.tds_mg_l,
            "ec_us_cm": self.sample.ec_us_cm,
            "nh3_ppm": self.sample.nh3_ppm,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "StoredRecord":
        if not isinstance(data, dict):
            raise ValueError("record must be a JSON object")
        seq = data.get("seq")
        if isinstance(seq, bool) or not isinstance(seq, int) or seq < 1:
            raise ValueError("seq must be a positive integer")
        return cls(seq=seq, sample=WaterSample.from_json_dict(data))


class TelemetryStore:
    """Time-ordered sample log with monotone sequence numbers.

    ``path=None`` keeps everything in memory (tests, throwaway runs).
    With a path, records are appended one JSON line at a time and
    flushed before the append returns.
    """

    def __init__(self, path: str | Path | None = None):
        if path is not None:
            p = Path(path)
            if p.exists() and p.stat().st_size > 0:
                raise ValueError(f"log {p} already has records; use TelemetryStore.recover")
        self._path = Path(path) if path is not None else None
        self._fh = open(self._path, "a", encoding="utf-8") if self._path else None
        self._records: list[StoredRecord] = []
        self._last_ts: dict[str, int] = {}
        self._lock = threading.RLock()

    # -- construction ------------------------------------------------

    @classmethod
    def recover(cls, log_path: str | Path) -> "TelemetryStore":
        """Rebuild from an existing log, dropping a torn or invalid tail.

        Scans complete lines in order and stops at the first line that
        fails to parse or breaks the seq/ts monotonicity invariants;
        the file is truncated back to the last good record so future
        appends keep the log parseable.
        """
        path = Path(log_path)
        data = path.read_bytes()

        records: list[StoredRecord] = []
        last_ts: dict[str, int] = {}
        good_bytes = 0
        for raw in data.splitlines(keepends=True):
            if not raw.endswith(b"\n"):
                break
            try:
                record = StoredRecord.from_json_dict(json.loads(raw.decode("utf-8")))
            except (ValueError, UnicodeDecodeError):
                break
            expected = records[-1].seq + 1 if records else 1
            if record.seq != expected:
                break
            prev = last_ts.get(record.sample.device_id)
            if prev is not None and record.sample.ts <= prev:
                break
            records.append(record)
            last_ts[record.sample.device_id] = record.sample.ts
            good_bytes += len(raw)

        if good_bytes != len(data):
            with open(path, "r+b") as f:
                f.truncate(good_bytes)

        store = cls.__new__(cls)
        store._path = path
        store._fh = open(path, "a", encoding="utf-8")
        store._records = records
        store._last_ts = last_ts
        store._lock = threading.RLock()
        return store

    @classmethod
    def open(cls, path: str | Path) -> "TelemetryStore":
        """Recover an existing log or start a fresh one."""
        p = Path(path)
        if p.exists() and p.stat().st_size > 0:
            return cls.recover(p)
        return cls(p)

    # -- writes ------------------------------------------------------

    def append(self, sample: WaterSample) -> int:
        with self._lock:
            prev = self._last_ts.get(sample.device_id)
            if prev is not None and sample.ts <= prev:
                raise OutOfOrder(sample.device_id, sample.ts)
            record = StoredRecord(seq=len(self._records) + 1, sample=sample)
            if self._fh is not None:
                self._fh.write(record.to_json_line() + "\n")
                self._fh.flush()
            self._records.append(record)
            self._last_ts[sample.device_id] = sample.ts
            return record.seq

    # -- reads -------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def latest(self) -> StoredRecord:
        with self._lock:
            if not self._records:
                raise NoData("store is empty")
            return self._records[-1]

    def range(self, from_ts: int, to_ts: int) -> list[StoredRecord]:
        """All records with from_ts <= ts <= to_ts, ascending by seq."""
        if from_ts > to_ts:
            raise InvalidRange(f"from_ts {from_ts} > to_ts {to_ts}")
        with self._lock:
            return [r for r in self._records if from_ts <= r.sample.ts <= to_ts]

    def all_records(self) -> list[StoredRecord]:
        with self._lock:
            return list(self._records)

    # -- lifecycle ---------------------------------------------------

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                self._fh.close()
                self._fh = None

    def __enter__(self) -> "TelemetryStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
