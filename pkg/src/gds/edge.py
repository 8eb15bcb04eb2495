"""The edge detection loop: motion gate -> detect -> track -> confirm -> event.

Per frame the pipeline (1) compares against the previous frame and skips
everything if too few pixels changed, (2) runs the detector on a downscaled
copy and maps boxes back to full resolution, (3) associates detections into
tracks greedily by IoU, (4) classifies a chip cropped from the full frame
for every track touched this frame, counting positive classifications, and
(5) fires a single GunEvent per track once the count reaches the configured
confirmation count.

The frame loop is strictly sequential; event delivery is decoupled through
a bounded queue with one worker so a slow sink cannot stall the loop.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoundingBox,
    Detection,
    FrameSize,
    GdsError,
    PipelineConfig,
    crop_and_resize,
    iou,
    resize_bilinear,
    scale_box,
)

EventSink = Callable[["GunEvent"], None]


class PipelineError(GdsError):
    """The frame stream violated a pipeline precondition."""


@dataclass(frozen=True)
class MotionResult:
    changed_fraction: float
    active: bool


@dataclass
class Track:
    """One tracked object; lives as long as the tracker keeps matching it."""

    track_id: int
    box: BoundingBox
    age_since_update: int = 0
    positive_classifications: int = 0
    confirmed: bool = False
    reported: bool = False


@dataclass(frozen=True, eq=False)
class GunEvent:
    """A confirmed sighting: metadata plus chip and full-frame snapshot."""

    device_id: str
    timestamp_ms: int
    track_id: int
    box: BoundingBox
    detector_score: float
    chip: np.ndarray
    snapshot: np.ndarray


def _grayscale(frame: np.ndarray) -> np.ndarray:
    if frame.ndim == 2:
        return frame.astype(np.int16)
    luma = frame[..., 0] * 0.299 + frame[..., 1] * 0.587 + frame[..., 2] * 0.114
    return np.floor(luma + 0.5).astype(np.int16)


def motion_gate(prev: np.ndarray, cur: np.ndarray, cfg: PipelineConfig) -> MotionResult:
    """Fraction of pixels whose grayscale delta exceeds motion_pixel_delta."""
    if prev.shape != cur.shape:
        raise PipelineError(f"frame shape changed: {prev.shape} -> {cur.shape}")
    delta = np.abs(_grayscale(cur) - _grayscale(prev))
    changed = int(np.count_nonzero(delta > cfg.motion_pixel_delta))
    fraction = changed / delta.size
    return MotionResult(changed_fraction=fraction, active=fraction >= cfg.motion_fraction_threshold)


@dataclass
class AssociationResult:
    tracks: list[Track]
    matched: list[tuple[Track, Detection]]
    next_track_id: int


def associate(
    tracks: list[Track],
    detections: list[Detection],
    cfg: PipelineConfig,
    next_track_id: int = 0,
) -> AssociationResult:
    """Greedy IoU association of one frame's detections into tracks.

    Detections are taken in descending score order; each claims the live
    unclaimed track of highest IoU if that IoU clears iou_match_threshold,
    otherwise it spawns a new track.  Unmatched tracks age by one and are
    dropped past track_max_age.  Ties keep list order (stable sort /
    first-best), so association is deterministic.
    """
    matched: list[tuple[Track, Detection]] = []
    claimed: set[int] = set()
    for det in sorted(detections, key=lambda d: -d.score):
        best: Track | None = None
        best_iou = 0.0
        for track in tracks:
            if id(track) in claimed:
                continue
            overlap = iou(track.box, det.box)
            if overlap >= cfg.iou_match_threshold and overlap > best_iou:
                best = track
                best_iou = overlap
        if best is not None:
            claimed.add(id(best))
            best.box = det.box
            best.age_since_update = 0
            matched.append((best, det))
        else:
            track = Track(track_id=next_track_id, box=det.box)
            next_track_id += 1
            tracks = tracks + [track]
            claimed.add(id(track))
            matched.append((track, det))
    survivors = []
    for track in tracks:
        if id(track) not in claimed:
            track.age_since_update += 1
        if track.age_since_update <= cfg.track_max_age:
            survivors.append(track)
    return AssociationResult(tracks=survivors, matched=matched, next_track_id=next_track_id)


def confirm_step(track: Track, score: float, cfg: PipelineConfig) -> bool:
    """Count one classification; return True exactly when the event fires.

    The counter is cumulative — a negative classification never resets it —
    and a track fires at most once in its lifetime.
    """
    if score >= cfg.classifier_threshold:
        track.positive_classifications += 1
    if track.positive_classifications >= cfg.confirm_count and not track.reported:
        track.confirmed = True
        track.reported = True
        return True
    return False


class EventQueue:
    """Bounded FIFO between the frame loop and the sink.

    put() never blocks: when full, the oldest unsent event is dropped and
    counted.  A failed delivery is retried in place up to max_attempts
    times, then counted undelivered; order is preserved throughout.
    """

    def __init__(self, sink: EventSink, maxlen: int = 64, max_attempts: int = 3):
        self._sink = sink
        self._maxlen = maxlen
        self._max_attempts = max_attempts
        self._items: deque[tuple[GunEvent, int]] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self.delivered = 0
        self.dropped = 0
        self.undelivered = 0
        self._worker = threading.Thread(target=self._run, name="event-queue", daemon=True)
        self._worker.start()

    def put(self, event: GunEvent) -> None:
        with self._cond:
            if len(self._items) >= self._maxlen:
                self._items.popleft()
                self.dropped += 1
            self._items.append((event, 0))
            self._cond.notify()

    def _run(self) -> None:
        while True:
            with self._cond:
                while not self._items and not self._closed:
                    self._cond.wait()
                if not self._items and self._closed:
                    return
                event, attempts = self._items.popleft()
            try:
                self._sink(event)
            except Exception:
                attempts += 1
                with self._cond:
                    if attempts < self._max_attempts:
                        self._items.appendleft((event, attempts))
                    else:
                        self.undelivered += 1
            else:
                with self._cond:
                    self.delivered += 1

    def close(self) -> None:
        """Flush remaining events and stop the worker."""
        with self._cond:
            self._closed = True
            self._cond.notify_all()
        self._worker.join()


@dataclass
class RunSummary:
    frames: int = 0
    detector_invocations: int = 0
    detections: int = 0
    tracks_created: int = 0
    events: int = 0
    events_delivered: int = 0
    events_dropped: int = 0
    events_undelivered: int = 0
    stage_seconds: dict[str, float] = field(default_factory=dict)


def run_pipeline(
    frames: Iterable[tuple[int, np.ndarray]],
    detector,
    classifier,
    cfg: PipelineConfig,
    sink: EventSink,
    device_id: str = "edge0",
    queue_size: int = 64,
) -> RunSummary:
    """Drive the full state machine over a frame stream.

    The first frame has no predecessor and is treated as motion-inactive, so
    a fully static stream never invokes the detector.  Timestamps must be
    monotonic; they are carried into events untouched, which is what makes
    replays byte-identical.
    """
    queue = EventQueue(sink, maxlen=queue_size)
    summary = RunSummary()
    stages = {"motion": 0.0, "detect": 0.0, "track": 0.0, "classify": 0.0}
    advance_hooks = [
        hook for hook in (getattr(detector, "advance", None), getattr(classifier, "advance", None)) if hook
    ]
    tracks: list[Track] = []
    next_track_id = 0
    prev: np.ndarray | None = None
    prev_ts: int | None = None
    active_seen = 0
    try:
        for index, (timestamp_ms, frame) in enumerate(frames):
            if prev_ts is not None and timestamp_ms < prev_ts:
                raise PipelineError(f"timestamps not monotonic: {prev_ts} -> {timestamp_ms}")
            prev_ts = timestamp_ms
            summary.frames += 1
            for hook in advance_hooks:
                hook(index)
            t0 = time.perf_counter()
            gate = MotionResult(0.0, False) if prev is None else motion_gate(prev, frame, cfg)
            stages["motion"] += time.perf_counter() - t0
            prev = frame
            if not gate.active:
                continue
            active_seen += 1
            if (active_seen - 1) % cfg.detect_stride != 0:
                continue
            t0 = time.perf_counter()
            full_size = FrameSize.of_array(frame)
            det_size = FrameSize(
                width=max(1, full_size.width // cfg.detect_scale),
                height=max(1, full_size.height // cfg.detect_scale),
            )
            small = (
                frame
                if det_size == full_size
                else resize_bilinear(frame, det_size.height, det_size.width)
            )
            raw = detector.detect(small)
            stages["detect"] += time.perf_counter() - t0
            summary.detector_invocations += 1
            summary.detections += len(raw)
            scaled = [
                Detection(box=scale_box(d.box, det_size, full_size), score=d.score) for d in raw
            ]
            t0 = time.perf_counter()
            result = associate(tracks, scaled, cfg, next_track_id)
            stages["track"] += time.perf_counter() - t0
            tracks = result.tracks
            summary.tracks_created += result.next_track_id - next_track_id
            next_track_id = result.next_track_id
            t0 = time.perf_counter()
            for track, det in result.matched:
                chip = crop_and_resize(frame, track.box, cfg.chip_size)
                score = classifier.classify(chip)
                if confirm_step(track, score, cfg):
                    queue.put(
                        GunEvent(
                            device_id=device_id,
                            timestamp_ms=timestamp_ms,
                            track_id=track.track_id,
                            box=track.box,
                            detector_score=det.score,
                            chip=chip,
                            snapshot=frame.copy(),
                        )
                    )
                    summary.events += 1
            stages["classify"] += time.perf_counter() - t0
    finally:
        queue.close()
    summary.events_delivered = queue.delivered
    summary.events_dropped = queue.dropped
    summary.events_undelivered = queue.undelivered
    summary.stage_seconds = stages
    return summary
