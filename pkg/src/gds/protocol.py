"""Wire protocol for reports crossing the edge -> cloud boundary.

The envelope is canonical JSON: UTF-8, lexicographically sorted keys, no
whitespace, image payloads base64-encoded.  Two semantically equal reports
therefore encode to identical bytes, which is what makes golden-file tests
and server-side deduplication trustworthy.  The normative field list lives
in docs/protocol.md; the decoder rejects unknown fields so that canonical
form stays unique.

Version history: 1 — initial.  `extra_snapshots` is carried (empty in v1)
so a later version can attach the consecutive scene snapshots a server-side
action recognizer would need, without a wire break.
"""

from __future__ import annotations

import base64
import binascii
import json
import time
from dataclasses import dataclass
from typing import Any

import httpx

from .core import BoundingBox, GdsError, GeometryError
from .edge import GunEvent
from .jpeg import encode_jpeg, looks_like_jpeg

PROTOCOL_VERSION = 1

REPORTS_PATH = "/api/v1/reports"


class ProtocolError(GdsError):
    """Base for envelope encode/decode failures."""


class VersionError(ProtocolError):
    """The envelope declares a protocol version this build does not speak."""


class SchemaError(ProtocolError):
    """A required field is missing, unknown, or has the wrong shape."""

    def __init__(self, field_name: str, detail: str = ""):
        message = f"field {field_name!r}" + (f": {detail}" if detail else " is invalid")
        super().__init__(message)
        self.field_name = field_name


class PayloadError(ProtocolError):
    """An image payload is corrupt (bad base64, empty, or not a JPEG)."""


class DeliveryError(GdsError):
    """The uplink exhausted its retry budget."""


@dataclass(frozen=True)
class DetectionReport:
    """One confirmed sighting as it travels over the wire."""

    device_id: str
    timestamp_ms: int
    track_id: int
    box: BoundingBox
    detector_score: float
    chip_jpeg: bytes
    snapshot_jpeg: bytes
    extra_snapshots: tuple[bytes, ...] = ()
    protocol_version: int = PROTOCOL_VERSION

    def __post_init__(self) -> None:
        if self.protocol_version != PROTOCOL_VERSION:
            raise VersionError(f"unsupported protocol version {self.protocol_version}")
        if not self.chip_jpeg or not self.snapshot_jpeg:
            raise PayloadError("image payloads must be non-empty")
        if not 0.0 <= self.detector_score <= 1.0:
            raise SchemaError("detector_score", f"{self.detector_score} outside [0, 1]")

    @property
    def dedup_key(self) -> tuple[str, int, int]:
        return (self.device_id, self.track_id, self.timestamp_ms)


def report_from_event(event: GunEvent, device_id: str | None = None) -> DetectionReport:
    """Package a pipeline event for the wire, JPEG-encoding both images."""
    return DetectionReport(
        device_id=device_id if device_id is not None else event.device_id,
        timestamp_ms=event.timestamp_ms,
        track_id=event.track_id,
        box=event.box,
        detector_score=event.detector_score,
        chip_jpeg=encode_jpeg(event.chip),
        snapshot_jpeg=encode_jpeg(event.snapshot),
    )


def encode_report(report: DetectionReport) -> bytes:
    """Serialize to the canonical envelope: identical reports, identical bytes."""
    envelope = {
        "protocol_version": report.protocol_version,
        "device_id": report.device_id,
        "timestamp_ms": report.timestamp_ms,
        "track_id": report.track_id,
        "box": list(report.box.as_tuple()),
        "detector_score": report.detector_score,
        "chip_jpeg": base64.b64encode(report.chip_jpeg).decode("ascii"),
        "snapshot_jpeg": base64.b64encode(report.snapshot_jpeg).decode("ascii"),
        "extra_snapshots": [base64.b64encode(s).decode("ascii") for s in report.extra_snapshots],
    }
    return json.dumps(envelope, sort_keys=True, separators=(",", ":")).encode("utf-8")


_FIELD_TYPES = {
    "protocol_version": int,
    "device_id": str,
    "timestamp_ms": int,
    "track_id": int,
    "box": list,
    "detector_score": (int, float),
    "chip_jpeg": str,
    "snapshot_jpeg": str,
    "extra_snapshots": list,
}


def _payload(name: str, text: str) -> bytes:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError) as exc:
        raise PayloadError(f"{name}: bad base64 ({exc})") from exc
    if not raw:
        raise PayloadError(f"{name}: empty payload")
    if not looks_like_jpeg(raw):
        raise PayloadError(f"{name}: payload is not a JPEG")
    return raw


def decode_report(data: bytes) -> DetectionReport:
    """Parse and validate an envelope; never returns a partial report."""
    try:
        envelope = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError("envelope", f"not valid JSON ({exc})") from exc
    if not isinstance(envelope, dict):
        raise SchemaError("envelope", "not a JSON object")
    version = envelope.get("protocol_version")
    if version is None:
        raise SchemaError("protocol_version")
    if version != PROTOCOL_VERSION:
        raise VersionError(f"unsupported protocol version {version!r}")
    for name, types in _FIELD_TYPES.items():
        if name not in envelope:
            raise SchemaError(name)
        if not isinstance(envelope[name], types) or isinstance(envelope[name], bool):
            raise SchemaError(name, f"expected {types}, got {type(envelope[name]).__name__}")
    unknown = set(envelope) - set(_FIELD_TYPES)
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    raw_box = envelope["box"]
    if len(raw_box) != 4 or not all(isinstance(c, int) and not isinstance(c, bool) for c in raw_box):
        raise SchemaError("box", f"expected 4 integers, got {raw_box!r}")
    try:
        box = BoundingBox.from_tuple(raw_box)
    except GeometryError as exc:
        raise SchemaError("box", str(exc)) from exc
    if not all(isinstance(s, str) for s in envelope["extra_snapshots"]):
        raise SchemaError("extra_snapshots", "expected base64 strings")
    return DetectionReport(
        device_id=envelope["device_id"],
        timestamp_ms=envelope["timestamp_ms"],
        track_id=envelope["track_id"],
        box=box,
        detector_score=float(envelope["detector_score"]),
        chip_jpeg=_payload("chip_jpeg", envelope["chip_jpeg"]),
        snapshot_jpeg=_payload("snapshot_jpeg", envelope["snapshot_jpeg"]),
        extra_snapshots=tuple(
            _payload("extra_snapshots", s) for s in envelope["extra_snapshots"]
        ),
    )


@dataclass(frozen=True)
class IngestAck:
    """The server's answer to one report."""

    disposition: str
    report_id: str | None = None
    reason: str = ""

    def __post_init__(self) -> None:
        if self.disposition not in ("accepted", "duplicate", "rejected"):
            raise SchemaError("disposition", repr(self.disposition))

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> IngestAck:
        if not isinstance(payload, dict) or "disposition" not in payload:
            raise SchemaError("disposition", "missing from ack")
        return cls(
            disposition=payload["disposition"],
            report_id=payload.get("report_id"),
            reason=payload.get("reason", ""),
        )

    def to_json(self) -> dict[str, Any]:
        body: dict[str, Any] = {"disposition": self.disposition}
        if self.report_id is not None:
            body["report_id"] = self.report_id
        if self.reason:
            body["reason"] = self.reason
        return body


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff: base_delay, doubling, capped, bounded attempts."""

    base_delay: float = 1.0
    factor: float = 2.0
    max_delay: float = 60.0
    max_attempts: int = 8

    def delay(self, attempt: int) -> float:
        """Seconds to wait after the given 1-based failed attempt."""
        return min(self.base_delay * self.factor ** (attempt - 1), self.max_delay)


class UplinkClient:
    """Delivers encoded reports to the ingest endpoint, retrying transport
    failures and 5xx responses with exponential backoff.

    4xx responses are not retried: the server understood the request and
    rejected it, so retrying cannot help.  One request is in flight at a
    time, preserving report order for a device.
    """

    def __init__(
        self,
        base_url: str,
        token: str | None = None,
        client: httpx.Client | None = None,
        retry: RetryPolicy = RetryPolicy(),
        sleep=time.sleep,
    ):
        headers = {"content-type": "application/json"}
        if token:
            headers["authorization"] = f"Bearer {token}"
        self._client = client if client is not None else httpx.Client(base_url=base_url)
        self._base_url = base_url.rstrip("/")
        self._headers = headers
        self._retry = retry
        self._sleep = sleep
        self.attempts_last_send = 0

    def close(self) -> None:
        self._client.close()

    def send(self, report: DetectionReport) -> IngestAck:
        """POST one report; returns the server's ack or raises DeliveryError."""
        body = encode_report(report)
        last_error: Exception | None = None
        for attempt in range(1, self._retry.max_attempts + 1):
            self.attempts_last_send = attempt
            try:
                response = self._client.post(
                    self._base_url + REPORTS_PATH, content=body, headers=self._headers
                )
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code < 500:
                    try:
                        return IngestAck.from_json(response.json())
                    except (json.JSONDecodeError, SchemaError) as exc:
                        raise DeliveryError(f"unintelligible ack: {exc}") from exc
                last_error = DeliveryError(f"server returned {response.status_code}")
            if attempt < self._retry.max_attempts:
                self._sleep(self._retry.delay(attempt))
        raise DeliveryError(
            f"gave up after {self._retry.max_attempts} attempts: {last_error}"
        ) from last_error

    def deliver_event(self, event: GunEvent) -> IngestAck:
        """Sink adapter for the edge pipeline: encode and send one event."""
        return self.send(report_from_event(event))


def randomized_report(rng, *, device_id: str | None = None) -> DetectionReport:
    """A structurally valid report drawn from an RNG; used by property tests
    and the protocol fuzz subcommand (payloads are synthetic, SOI-prefixed)."""
    x_min = rng.randrange(0, 600)
    y_min = rng.randrange(0, 400)
    box = BoundingBox(
        x_min, y_min, x_min + rng.randrange(1, 64), y_min + rng.randrange(1, 64)
    )
    chip = b"\xff\xd8" + bytes(rng.randrange(256) for _ in range(rng.randrange(4, 64)))
    snap = b"\xff\xd8" + bytes(rng.randrange(256) for _ in range(rng.randrange(4, 64)))
    return DetectionReport(
        device_id=device_id if device_id is not None else f"cam{rng.randrange(100):02d}",
        timestamp_ms=rng.randrange(0, 2**45),
        track_id=rng.randrange(0, 10_000),
        box=box,
        detector_score=rng.randrange(0, 10_001) / 10_000,
        chip_jpeg=chip,
        snapshot_jpeg=snap,
        extra_snapshots=(),
    )
