"""HTTP surface of the alert service (API v1).

Routes map 1:1 onto GunAlertService methods; this layer only decodes the
envelope, translates errors to status codes, and serializes responses.
A static bearer token, when configured, guards every /api/v1 route via a
router-level dependency.
"""

from __future__ import annotations

from typing import Any, Literal

from fastapi import APIRouter, Depends, FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import protocol
from .config import ServerConfig, build_classifier
from .service import GunAlertService, StorageFailure
from .storage import Alert, AlertNotFoundError, AlertStore, ReviewConflictError


def _alert_json(alert: Alert) -> dict[str, Any]:
    return alert.to_json()


class ReviewRequest(BaseModel):
    verdict: Literal["acknowledged", "false_positive"]
    reviewer: str = "console"


def create_app(service: GunAlertService, bearer_token: str | None = None) -> FastAPI:
    def require_token(request: Request) -> None:
        if bearer_token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {bearer_token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    router = APIRouter(prefix="/api/v1", dependencies=[Depends(require_token)])

    @router.post("/reports")
    async def ingest_report(request: Request) -> Response:
        body = await request.body()
        try:
            report = protocol.decode_report(body)
        except protocol.ProtocolError as exc:
            ack = protocol.IngestAck(disposition="rejected", reason=str(exc))
            return JSONResponse(ack.to_json(), status_code=400)
        try:
            ack = service.ingest(report)
        except StorageFailure as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        status = 400 if ack.disposition == "rejected" else 200
        return JSONResponse(ack.to_json(), status_code=status)

    @router.get("/alerts")
    def list_alerts(
        device: str | None = None,
        disposition: Literal["confirmed", "suppressed"] | None = None,
        review: Literal["unreviewed", "acknowledged", "false_positive"] | None = None,
        since_ms: int | None = None,
        until_ms: int | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> dict[str, Any]:
        if page < 1 or not 1 <= page_size <= 500:
            raise HTTPException(status_code=422, detail="bad page/page_size")
        result = service.list_alerts(
            device_id=device,
            disposition=disposition,
            review=review,
            since_ms=since_ms,
            until_ms=until_ms,
            page=page,
            page_size=page_size,
        )
        return {
            "alerts": [_alert_json(a) for a in result.alerts],
            "page": result.page,
            "pages": result.pages,
            "total": result.total,
        }

    @router.get("/alerts/{report_id}")
    def get_alert(report_id: str) -> dict[str, Any]:
        try:
            return _alert_json(service.store.get(report_id))
        except AlertNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @router.post("/alerts/{report_id}/review")
    def review_alert(report_id: str, body: ReviewRequest) -> dict[str, Any]:
        try:
            return _alert_json(service.review_alert(report_id, body.verdict, body.reviewer))
        except AlertNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ReviewConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    def _blob(read, report_id: str) -> Response:
        try:
            return Response(content=read(report_id), media_type="image/jpeg")
        except (AlertNotFoundError, FileNotFoundError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @router.get("/alerts/{report_id}/snapshot")
    def get_snapshot(report_id: str) -> Response:
        return _blob(service.store.snapshot_bytes, report_id)

    @router.get("/alerts/{report_id}/chip")
    def get_chip(report_id: str) -> Response:
        return _blob(service.store.chip_bytes, report_id)

    def _device_json(status) -> dict[str, Any]:
        return {
            "device_id": status.record.device_id,
            "name": status.record.name,
            "last_seen_ms": status.record.last_seen_ms,
            "reports": status.record.reports,
            "online": status.online,
        }

    @router.get("/devices")
    def list_devices() -> dict[str, Any]:
        return {"devices": [_device_json(s) for s in service.list_devices()]}

    @router.post("/devices/{device_id}/heartbeat")
    def heartbeat(device_id: str) -> dict[str, Any]:
        return _device_json(service.heartbeat(device_id))

    @router.get("/hard-negatives")
    def hard_negatives() -> dict[str, Any]:
        ids = sorted(service.hard_negative_ids())
        return {"count": len(ids), "report_ids": ids}

    @router.post("/hard-negatives/export")
    def export_hard_negatives() -> dict[str, Any]:
        out = service.store.root / "exports" / "hard-negatives"
        count = service.export_hard_negatives(out)
        return {"exported": count, "out": str(out)}

    app = FastAPI(title="gun-alert-service", docs_url=None, redoc_url=None)
    app.state.service = service
    app.include_router(router)
    return app


def build_app(config: ServerConfig) -> FastAPI:
    """Assemble store + service + app from a ServerConfig (production path)."""
    store = AlertStore(config.storage_root)
    service = GunAlertService(
        store=store,
        classifier=build_classifier(config.classifier),
        classifier_threshold=config.classifier_threshold,
        webhook_urls=config.webhook_urls,
        chip_size=config.chip_size,
    )
    return create_app(service, bearer_token=config.bearer_token)
