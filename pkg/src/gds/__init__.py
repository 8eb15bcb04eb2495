"""Edge/cloud gun detection toolkit.

An edge pipeline (motion gate, pluggable detector, IoU tracker,
repeated-classification confirmation) that ships confirmed sightings over a
canonical wire protocol to a cloud service (second-stage classification,
alert storage, review, webhooks), plus dataset tooling and the evaluation
harness for the published measurement protocols.
"""

from .backends import (
    ClassifierBackend,
    ConstantClassifier,
    DetectorBackend,
    NullBackend,
    OracleBackend,
    OracleClassifier,
)
from .core import (
    BoundingBox,
    Detection,
    FrameSize,
    GdsError,
    GeometryError,
    OutOfBoundsError,
    PipelineConfig,
    crop_and_resize,
    iou,
    resize_bilinear,
    scale_box,
)
from .edge import (
    GunEvent,
    MotionResult,
    RunSummary,
    Track,
    associate,
    confirm_step,
    motion_gate,
    run_pipeline,
)
from .evaluation import (
    ConfusionCounts,
    Metrics,
    RocCurve,
    classifier_metrics,
    detection_metrics,
    fps_bench,
    match_detections,
    roc,
)
from .protocol import (
    DetectionReport,
    IngestAck,
    RetryPolicy,
    UplinkClient,
    decode_report,
    encode_report,
    report_from_event,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "ClassifierBackend",
    "ConfusionCounts",
    "ConstantClassifier",
    "Detection",
    "DetectionReport",
    "DetectorBackend",
    "FrameSize",
    "GdsError",
    "GeometryError",
    "GunEvent",
    "IngestAck",
    "Metrics",
    "MotionResult",
    "NullBackend",
    "OracleBackend",
    "OracleClassifier",
    "OutOfBoundsError",
    "PipelineConfig",
    "RetryPolicy",
    "RocCurve",
    "RunSummary",
    "Track",
    "UplinkClient",
    "associate",
    "classifier_metrics",
    "confirm_step",
    "crop_and_resize",
    "decode_report",
    "detection_metrics",
    "encode_report",
    "fps_bench",
    "iou",
    "match_detections",
    "motion_gate",
    "report_from_event",
    "resize_bilinear",
    "roc",
    "run_pipeline",
    "scale_box",
    "__version__",
]
