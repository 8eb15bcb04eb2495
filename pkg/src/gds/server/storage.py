"""File-backed alert and device persistence.

Layout under the storage root:

    alerts/<report_id>.json    one document per alert
    blobs/<report_id>.chip.jpg
    blobs/<report_id>.snap.jpg
    devices.json               device registry
    audit.jsonl                append-only review audit log

Everything is rewritten atomically (temp file + rename), and the whole
store is rebuilt from disk on startup, which is what makes restart lose
nothing.  A single lock serializes mutations; listings copy under the lock
so readers always see a consistent snapshot.  At one report per confirmed
event the write rate is tiny, so the simplest correct thing wins.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any

from ..core import GdsError

DISPOSITIONS = ("confirmed", "suppressed")
REVIEWS = ("unreviewed", "acknowledged", "false_positive")


class AlertNotFoundError(GdsError):
    """No alert with that report_id."""


class ReviewConflictError(GdsError):
    """The alert has already been reviewed; review is write-once."""


@dataclass(frozen=True)
class DeliveryRecord:
    url: str
    success: bool
    attempts: int


@dataclass(frozen=True)
class Alert:
    report_id: str
    device_id: str
    received_at_ms: int
    timestamp_ms: int
    track_id: int
    box: tuple[int, int, int, int]
    detector_score: float
    second_stage_score: float
    disposition: str
    review: str = "unreviewed"
    reviewer: str | None = None
    reviewed_at_ms: int | None = None
    deliveries: tuple[DeliveryRecord, ...] = ()
    undelivered: bool = False

    def __post_init__(self) -> None:
        if self.disposition not in DISPOSITIONS:
            raise ValueError(f"bad disposition: {self.disposition!r}")
        if self.review not in REVIEWS:
            raise ValueError(f"bad review state: {self.review!r}")

    def to_json(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["box"] = list(self.box)
        doc["deliveries"] = [asdict(d) for d in self.deliveries]
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> Alert:
        doc = dict(doc)
        doc["box"] = tuple(doc["box"])
        doc["deliveries"] = tuple(DeliveryRecord(**d) for d in doc["deliveries"])
        return cls(**doc)


@dataclass(frozen=True)
class DeviceRecord:
    device_id: str
    name: str
    last_seen_ms: int
    reports: int = 0


def make_report_id(device_id: str, track_id: int, timestamp_ms: int) -> str:
    """Deterministic id from the dedup key, so re-ingest across restarts
    collapses onto the same record."""
    digest = hashlib.sha256(f"{device_id}\x00{track_id}\x00{timestamp_ms}".encode()).hexdigest()
    return f"r{digest[:16]}"


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


class AlertStore:
    """All persisted server state, loaded eagerly from the storage root."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._alerts_dir = self.root / "alerts"
        self._blobs_dir = self.root / "blobs"
        self._devices_path = self.root / "devices.json"
        self._audit_path = self.root / "audit.jsonl"
        self._alerts_dir.mkdir(parents=True, exist_ok=True)
        self._blobs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._alerts: dict[str, Alert] = {}
        self._devices: dict[str, DeviceRecord] = {}
        self._load()

    def _load(self) -> None:
        for path in sorted(self._alerts_dir.glob("*.json")):
            alert = Alert.from_json(json.loads(path.read_text()))
            self._alerts[alert.report_id] = alert
        if self._devices_path.exists():
            raw = json.loads(self._devices_path.read_text())
            self._devices = {d["device_id"]: DeviceRecord(**d) for d in raw}

    # -- alerts ---------------------------------------------------------

    def has_report(self, device_id: str, track_id: int, timestamp_ms: int) -> bool:
        return make_report_id(device_id, track_id, timestamp_ms) in self._alerts

    def get(self, report_id: str) -> Alert:
        with self._lock:
            try:
                return self._alerts[report_id]
            except KeyError:
                raise AlertNotFoundError(f"no alert {report_id}") from None

    def put_alert(self, alert: Alert, chip_jpeg: bytes, snapshot_jpeg: bytes) -> None:
        with self._lock:
            _write_atomic(self._blobs_dir / f"{alert.report_id}.chip.jpg", chip_jpeg)
            _write_atomic(self._blobs_dir / f"{alert.report_id}.snap.jpg", snapshot_jpeg)
            self._persist(alert)

    def update_alert(self, alert: Alert) -> None:
        with self._lock:
            if alert.report_id not in self._alerts:
                raise AlertNotFoundError(f"no alert {alert.report_id}")
            self._persist(alert)

    def _persist(self, alert: Alert) -> None:
        _write_atomic(
            self._alerts_dir / f"{alert.report_id}.json",
            json.dumps(alert.to_json(), sort_keys=True, indent=1).encode(),
        )
        self._alerts[alert.report_id] = alert

    def chip_bytes(self, report_id: str) -> bytes:
        self.get(report_id)
        return (self._blobs_dir / f"{report_id}.chip.jpg").read_bytes()

    def snapshot_bytes(self, report_id: str) -> bytes:
        self.get(report_id)
        return (self._blobs_dir / f"{report_id}.snap.jpg").read_bytes()

    def list_alerts(
        self,
        device_id: str | None = None,
        disposition: str | None = None,
        review: str | None = None,
        since_ms: int | None = None,
        until_ms: int | None = None,
    ) -> list[Alert]:
        """Filtered alerts, newest first (received order, id tiebreak)."""
        with self._lock:
            alerts = list(self._alerts.values())
        alerts.sort(key=lambda a: (-a.received_at_ms, a.report_id))
        out = []
        for alert in alerts:
            if device_id is not None and alert.device_id != device_id:
                continue
            if disposition is not None and alert.disposition != disposition:
                continue
            if review is not None and alert.review != review:
                continue
            if since_ms is not None and alert.timestamp_ms < since_ms:
                continue
            if until_ms is not None and alert.timestamp_ms >= until_ms:
                continue
            out.append(alert)
        return out

    def review(self, report_id: str, verdict: str, reviewer: str, at_ms: int) -> Alert:
        """Write-once review transition; appends to the audit log."""
        if verdict not in ("acknowledged", "false_positive"):
            raise ValueError(f"bad verdict: {verdict!r}")
        with self._lock:
            alert = self.get(report_id)
            if alert.review != "unreviewed":
                raise ReviewConflictError(f"alert {report_id} already reviewed ({alert.review})")
            updated = replace(alert, review=verdict, reviewer=reviewer, reviewed_at_ms=at_ms)
            self._persist(updated)
            with self._audit_path.open("a") as handle:
                handle.write(
                    json.dumps(
                        {"report_id": report_id, "verdict": verdict, "reviewer": reviewer, "at_ms": at_ms},
                        sort_keys=True,
                    )
                    + "\n"
                )
            return updated

    def audit_entries(self) -> list[dict[str, Any]]:
        if not self._audit_path.exists():
            return []
        return [json.loads(line) for line in self._audit_path.read_text().splitlines() if line]

    # -- devices --------------------------------------------------------

    def heartbeat(self, device_id: str, at_ms: int, name: str | None = None) -> DeviceRecord:
        with self._lock:
            current = self._devices.get(device_id)
            record = DeviceRecord(
                device_id=device_id,
                name=name or (current.name if current else device_id),
                last_seen_ms=max(at_ms, current.last_seen_ms) if current else at_ms,
                reports=current.reports if current else 0,
            )
            self._devices[device_id] = record
            self._save_devices()
            return record

    def count_report(self, device_id: str, at_ms: int) -> None:
        with self._lock:
            record = self.heartbeat(device_id, at_ms)
            self._devices[device_id] = replace(record, reports=record.reports + 1)
            self._save_devices()

    def list_devices(self) -> list[DeviceRecord]:
        with self._lock:
            return sorted(self._devices.values(), key=lambda d: d.device_id)

    def _save_devices(self) -> None:
        docs = [asdict(d) for d in self.list_devices()]
        _write_atomic(self._devices_path, json.dumps(docs, sort_keys=True, indent=1).encode())
