"""Evaluation protocols: detection matching, binary metrics, ROC/AUC, FPS.

Detection matching is VOC-style greedy one-to-one: per image, predictions
in descending score order each claim the unmatched ground-truth box of
highest IoU when that IoU clears the threshold.  Detection "accuracy" is
defined here as tp/(tp+fp+fn) — detection has no true negatives — and that
definition is artifact-normative, not something the source tables pin down.

Metrics with a zero denominator are reported as undefined (None), never
silently 0 or 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import BoundingBox, GdsError, GeometryError, PipelineConfig, iou
from .edge import run_pipeline

Predictions = dict[str, list[tuple[BoundingBox, float]]]
GroundTruth = dict[str, list[BoundingBox]]


class EvalError(GdsError):
    """Evaluation precondition violated (empty input, single-class ROC, ...)."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    """Ratios in [0,1]; None marks an undefined metric (zero denominator)."""

    accuracy: float | None
    recall: float | None
    precision: float | None


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def match_detections(predictions: Predictions, ground_truth: GroundTruth, iou_thr: float) -> ConfusionCounts:
    """Greedy one-to-one matching over every image; tn is always 0.

    Ties are deterministic: equal scores keep file order, equal IoU keeps
    ground-truth list order.
    """
    if not 0.0 < iou_thr <= 1.0:
        raise EvalError(f"iou_thr must be in (0, 1], got {iou_thr}")
    tp = fp = fn = 0
    for image in sorted(set(predictions) | set(ground_truth)):
        preds = sorted(predictions.get(image, []), key=lambda p: -p[1])
        gts = ground_truth.get(image, [])
        matched = [False] * len(gts)
        for box, _score in preds:
            best_index = -1
            best_iou = 0.0
            for index, gt_box in enumerate(gts):
                if matched[index]:
                    continue
                overlap = iou(box, gt_box)
                if overlap > best_iou:
                    best_index = index
                    best_iou = overlap
            if best_index >= 0 and best_iou >= iou_thr:
                matched[best_index] = True
                tp += 1
            else:
                fp += 1
        fn += matched.count(False)
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=0)


def detection_metrics(counts: ConfusionCounts) -> Metrics:
    """Acc = tp/(tp+fp+fn) (artifact definition), Rec = tp/(tp+fn), Pre = tp/(tp+fp)."""
    return Metrics(
        accuracy=_ratio(counts.tp, counts.tp + counts.fp + counts.fn),
        recall=_ratio(counts.tp, counts.tp + counts.fn),
        precision=_ratio(counts.tp, counts.tp + counts.fp),
    )


def classifier_metrics(
    scores: Sequence[float], labels: Sequence[bool], thr: float
) -> tuple[ConfusionCounts, Metrics]:
    """Binary confusion at `thr` (predict gun ⟺ score ≥ thr) plus metrics."""
    if len(scores) != len(labels):
        raise EvalError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    if not scores:
        raise EvalError("empty input")
    tp = fp = fn = tn = 0
    for score, label in zip(scores, labels):
        predicted = score >= thr
        if predicted and label:
            tp += 1
        elif predicted and not label:
            fp += 1
        elif not predicted and label:
            fn += 1
        else:
            tn += 1
    counts = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)
    metrics = Metrics(
        accuracy=_ratio(tp + tn, counts.total),
        recall=_ratio(tp, tp + fn),
        precision=_ratio(tp, tp + fp),
    )
    return counts, metrics


@dataclass(frozen=True)
class RocCurve:
    """Sweep of (fpr, tpr) from (0,0) to (1,1); thresholds[i] produced points[i]."""

    thresholds: tuple[float, ...]
    points: tuple[tuple[float, float], ...]
    auc: float


def roc(scores: Sequence[float], labels: Sequence[bool]) -> RocCurve:
    """Threshold sweep over the distinct scores, tied scores grouped.

    The first point is the empty-prediction corner (threshold +inf); each
    distinct score then adds one point; the final point is necessarily
    (1,1).  AUC is the trapezoidal area, which equals pair-counting AUC
    with ties counted a half.
    """
    if len(scores) != len(labels):
        raise EvalError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    positives = sum(1 for label in labels if label)
    negatives = len(labels) - positives
    if positives == 0 or negatives == 0:
        raise EvalError("ROC needs at least one positive and one negative label")
    order = sorted(zip(scores, labels), key=lambda item: -item[0])
    thresholds = [float("inf")]
    points = [(0.0, 0.0)]
    tp = fp = 0
    index = 0
    while index < len(order):
        score = order[index][0]
        while index < len(order) and order[index][0] == score:
            if order[index][1]:
                tp += 1
            else:
                fp += 1
            index += 1
        thresholds.append(score)
        points.append((fp / negatives, tp / positives))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(thresholds=tuple(thresholds), points=tuple(points), auc=auc)


@dataclass(frozen=True)
class BenchReport:
    frames: int
    measured_frames: int
    wall_seconds: float
    fps: float
    detector_invocations: int
    detections: int
    events: int
    stage_seconds: dict[str, float]


def fps_bench(
    frames,
    detector,
    classifier,
    cfg: PipelineConfig,
    warmup: int = 10,
    device_id: str = "bench",
) -> BenchReport:
    """Run the real pipeline loop and measure frames/second.

    The first `warmup` frames are excluded from the measured window (JIT
    caches, page faults); the per-stage breakdown covers the whole run and
    is meant for relative cost, not absolute timing.
    """
    started = time.perf_counter()
    window_start = started
    seen = 0

    def instrumented():
        nonlocal window_start, seen
        for index, item in enumerate(frames):
            if index == warmup:
                window_start = time.perf_counter()
            seen += 1
            yield item

    summary = run_pipeline(
        instrumented(), detector, classifier, cfg, sink=lambda event: None, device_id=device_id
    )
    wall = time.perf_counter() - window_start
    measured = seen - warmup
    if measured <= 0:
        raise EvalError(f"need more than {warmup} frames to measure, got {seen}")
    return BenchReport(
        frames=summary.frames,
        measured_frames=measured,
        wall_seconds=wall,
        fps=measured / wall if wall > 0 else float("inf"),
        detector_invocations=summary.detector_invocations,
        detections=summary.detections,
        events=summary.events,
        stage_seconds=summary.stage_seconds,
    )


def read_predictions(path: Path | str) -> Predictions:
    """Parse a prediction file: image<TAB>score<TAB>xmin,ymin,xmax,ymax."""
    predictions: Predictions = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise EvalError(f"{path}:{line_no}: expected 3 tab-separated fields")
        image, score_text, box_text = parts
        try:
            score = float(score_text)
            coords = tuple(int(c) for c in box_text.split(","))
        except ValueError as exc:
            raise EvalError(f"{path}:{line_no}: {exc}") from exc
        if len(coords) != 4:
            raise EvalError(f"{path}:{line_no}: box needs 4 coordinates")
        predictions.setdefault(image, []).append((BoundingBox.from_tuple(coords), score))
    return predictions


def write_predictions(path: Path | str, predictions: Predictions) -> None:
    lines = []
    for image in sorted(predictions):
        for box, score in predictions[image]:
            lines.append(f"{image}\t{score}\t{box.x_min},{box.y_min},{box.x_max},{box.y_max}")
    Path(path).write_text("".join(line + "\n" for line in lines))


def ground_truth_from_index(index) -> tuple[GroundTruth, int]:
    """Ground truth keyed by image relpath; returns (gt, skipped_boxes).

    Boxes that violate the geometry invariants are skipped and counted, so
    dirty annotations degrade loudly rather than crashing the eval.
    """
    gt: GroundTruth = {}
    skipped = 0
    for entry in index.annotated():
        boxes = []
        for name, coords in entry.annotation.objects:
            if name != "gun":
                continue
            try:
                boxes.append(BoundingBox.from_tuple(coords))
            except GeometryError:
                skipped += 1
        gt[entry.relpath] = boxes
    return gt, skipped
