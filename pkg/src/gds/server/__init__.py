"""Cloud side: ingest, second-stage classification, alert storage, console API."""

from .app import build_app, create_app
from .config import ConfigError, ServerConfig, build_classifier
from .service import GunAlertService, StorageFailure
from .storage import (
    Alert,
    AlertNotFoundError,
    AlertStore,
    DeliveryRecord,
    DeviceRecord,
    ReviewConflictError,
    make_report_id,
)

__all__ = [
    "Alert",
    "AlertNotFoundError",
    "AlertStore",
    "ConfigError",
    "DeliveryRecord",
    "DeviceRecord",
    "GunAlertService",
    "ReviewConflictError",
    "ServerConfig",
    "StorageFailure",
    "build_app",
    "build_classifier",
    "create_app",
    "make_report_id",
]
