"""Server-side application logic, independent of the HTTP layer.

Ingest runs the second-stage classifier over the report's chip and persists
an Alert either way: confirmed alerts dispatch notifications, suppressed
ones are kept as hard-case candidates for review.  The clock is injected so
tests can steer time (device online windows, audit timestamps).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import httpx

from ..backends import ClassifierBackend
from ..core import GdsError, resize_bilinear
from ..jpeg import ImageIoError, decode_jpeg, encode_jpeg
from ..protocol import DetectionReport, IngestAck
from .storage import Alert, AlertStore, DeliveryRecord, DeviceRecord, make_report_id

ONLINE_WINDOW_MS = 90_000
WEBHOOK_ATTEMPTS = 3


def _utc_now_ms() -> int:
    return int(time.time() * 1000)


class StorageFailure(GdsError):
    """Persisting an alert failed; the edge should retry the report."""


@dataclass(frozen=True)
class DeviceStatus:
    record: DeviceRecord
    online: bool


@dataclass(frozen=True)
class AlertPage:
    alerts: list[Alert]
    page: int
    pages: int
    total: int


class GunAlertService:
    """Everything the HTTP API exposes, as plain methods."""

    def __init__(
        self,
        store: AlertStore,
        classifier: ClassifierBackend,
        classifier_threshold: float = 0.5,
        webhook_urls: tuple[str, ...] = (),
        webhook_client: httpx.Client | None = None,
        clock: Callable[[], int] = _utc_now_ms,
        chip_size: int = 112,
        alert_link_base: str = "/api/v1/alerts",
    ):
        self.store = store
        self.classifier = classifier
        self.classifier_threshold = classifier_threshold
        self.webhook_urls = tuple(webhook_urls)
        self._webhooks = webhook_client if webhook_client is not None else httpx.Client(timeout=5.0)
        self.clock = clock
        self.chip_size = chip_size
        self._link_base = alert_link_base

    # -- ingest ---------------------------------------------------------

    def ingest(self, report: DetectionReport) -> IngestAck:
        """Classify, persist, and (when confirmed) notify; idempotent on the
        (device_id, track_id, timestamp_ms) key."""
        report_id = make_report_id(report.device_id, report.track_id, report.timestamp_ms)
        if self.store.has_report(report.device_id, report.track_id, report.timestamp_ms):
            return IngestAck(disposition="duplicate", report_id=report_id)
        try:
            chip = decode_jpeg(report.chip_jpeg)
        except ImageIoError as exc:
            return IngestAck(disposition="rejected", reason=f"chip does not decode: {exc}")
        score = float(self.classifier.classify(chip))
        if not 0.0 <= score <= 1.0 or math.isnan(score):
            return IngestAck(disposition="rejected", reason=f"classifier returned {score!r}")
        now = self.clock()
        alert = Alert(
            report_id=report_id,
            device_id=report.device_id,
            received_at_ms=now,
            timestamp_ms=report.timestamp_ms,
            track_id=report.track_id,
            box=report.box.as_tuple(),
            detector_score=report.detector_score,
            second_stage_score=score,
            disposition="confirmed" if score >= self.classifier_threshold else "suppressed",
        )
        try:
            self.store.put_alert(alert, report.chip_jpeg, report.snapshot_jpeg)
            self.store.count_report(report.device_id, now)
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc
        if alert.disposition == "confirmed":
            alert = self.dispatch_notification(alert)
        return IngestAck(disposition="accepted", report_id=report_id)

    # -- notifications ----------------------------------------------------

    def dispatch_notification(self, alert: Alert) -> Alert:
        """POST the alert summary (links, no images) to every webhook.

        Each URL gets up to WEBHOOK_ATTEMPTS tries; results land on the
        alert, and the undelivered flag goes up only when every configured
        URL failed.
        """
        if not self.webhook_urls:
            return alert
        payload = {
            "report_id": alert.report_id,
            "device_id": alert.device_id,
            "timestamp_ms": alert.timestamp_ms,
            "detector_score": alert.detector_score,
            "second_stage_score": alert.second_stage_score,
            "box": list(alert.box),
            "links": {
                "alert": f"{self._link_base}/{alert.report_id}",
                "snapshot": f"{self._link_base}/{alert.report_id}/snapshot",
                "chip": f"{self._link_base}/{alert.report_id}/chip",
            },
        }
        records = []
        for url in self.webhook_urls:
            success = False
            attempts = 0
            for attempts in range(1, WEBHOOK_ATTEMPTS + 1):
                try:
                    response = self._webhooks.post(url, json=payload)
                    success = 200 <= response.status_code < 300
                except httpx.HTTPError:
                    success = False
                if success:
                    break
            records.append(DeliveryRecord(url=url, success=success, attempts=attempts))
        updated = replace(
            alert,
            deliveries=tuple(records),
            undelivered=not any(r.success for r in records),
        )
        self.store.update_alert(updated)
        return updated

    # -- console ----------------------------------------------------------

    def list_alerts(
        self,
        device_id: str | None = None,
        disposition: str | None = None,
        review: str | None = None,
        since_ms: int | None = None,
        until_ms: int | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> AlertPage:
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        alerts = self.store.list_alerts(
            device_id=device_id,
            disposition=disposition,
            review=review,
            since_ms=since_ms,
            until_ms=until_ms,
        )
        total = len(alerts)
        pages = max(1, -(-total // page_size))
        start = (page - 1) * page_size
        return AlertPage(alerts=alerts[start : start + page_size], page=page, pages=pages, total=total)

    def review_alert(self, report_id: str, verdict: str, reviewer: str) -> Alert:
        return self.store.review(report_id, verdict, reviewer, self.clock())

    def hard_negative_ids(self) -> list[str]:
        return [a.report_id for a in self.store.list_alerts(review="false_positive")]

    def export_hard_negatives(self, out: Path | str) -> int:
        """Write every false-positive chip as classifier/other 112x112 JPEGs.

        Names derive from report ids, and re-encoding is deterministic, so
        re-exporting over the same directory reproduces identical bytes.
        """
        out_dir = Path(out) / "classifier" / "other"
        out_dir.mkdir(parents=True, exist_ok=True)
        written = 0
        for report_id in sorted(self.hard_negative_ids()):
            chip = decode_jpeg(self.store.chip_bytes(report_id))
            if chip.shape[0] != self.chip_size or chip.shape[1] != self.chip_size:
                chip = resize_bilinear(chip, self.chip_size, self.chip_size)
            (out_dir / f"{report_id}.jpg").write_bytes(encode_jpeg(chip))
            written += 1
        return written

    # -- devices ----------------------------------------------------------

    def heartbeat(self, device_id: str, name: str | None = None) -> DeviceStatus:
        record = self.store.heartbeat(device_id, self.clock(), name=name)
        return DeviceStatus(record=record, online=True)

    def list_devices(self) -> list[DeviceStatus]:
        now = self.clock()
        return [
            DeviceStatus(record=record, online=now - record.last_seen_ms <= ONLINE_WINDOW_MS)
            for record in self.store.list_devices()
        ]

    def close(self) -> None:
        self._webhooks.close()
