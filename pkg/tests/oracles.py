"""Independent reference implementations used to cross-check the library.

Every function here recomputes a result by a different route than the
production code (cell counting instead of algebra, scalar loops instead of
vectorized gathers, pair counting instead of trapezoids).  Tests compare
the two routes; nothing in this module imports the implementation under
test except for shared plain data types.
"""

from __future__ import annotations

import math

import numpy as np

Box = tuple[int, int, int, int]


def grid_iou(a: Box, b: Box) -> float:
    """IoU by counting unit cells [c, c+1) x [r, r+1) covered by each box."""
    inter = 0
    union = 0
    x_lo = min(a[0], b[0])
    x_hi = max(a[2], b[2])
    y_lo = min(a[1], b[1])
    y_hi = max(a[3], b[3])
    for x in range(x_lo, x_hi):
        for y in range(y_lo, y_hi):
            in_a = a[0] <= x < a[2] and a[1] <= y < a[3]
            in_b = b[0] <= x < b[2] and b[1] <= y < b[3]
            if in_a and in_b:
                inter += 1
            if in_a or in_b:
                union += 1
    return inter / union


def lattice_boxes(values: tuple[int, ...]) -> list[Box]:
    """Every box whose four coordinates come from the given sorted lattice."""
    intervals = [(lo, hi) for i, lo in enumerate(values) for hi in values[i + 1 :]]
    return [(x0, y0, x1, y1) for (x0, x1) in intervals for (y0, y1) in intervals]


def grid_iou_matrix(boxes: list[Box], extent: int) -> np.ndarray:
    """Pairwise grid-counting IoU for many boxes at once.

    Each box becomes a 0/1 cell mask over an extent x extent grid;
    intersections are exact float64 dot products of masks (cell counts are
    far below 2**53, so no rounding occurs anywhere in the oracle).
    """
    masks = np.zeros((len(boxes), extent * extent), dtype=np.float64)
    for index, (x0, y0, x1, y1) in enumerate(boxes):
        mask = np.zeros((extent, extent), dtype=np.float64)
        mask[y0:y1, x0:x1] = 1.0
        masks[index] = mask.ravel()
    inter = masks @ masks.T
    areas = inter.diagonal().copy()
    union = areas[:, None] + areas[None, :] - inter
    return inter / union


def bilinear_reference(pixels, out_h: int, out_w: int) -> list[list[int]]:
    """Scalar bilinear resample: center-aligned sampling, edge clamp,
    round-half-up to uint8 range.  Grayscale only; plain Python arithmetic."""
    height = len(pixels)
    width = len(pixels[0])
    # sample centers at (i + 0.5) * (src/out) - 0.5, the documented formula
    # (the per-axis ratio is evaluated once, exactly as documented)
    scale_y = height / out_h
    scale_x = width / out_w
    out = []
    for i in range(out_h):
        pos_y = (i + 0.5) * scale_y - 0.5
        y0 = math.floor(pos_y)
        fy = pos_y - y0
        ya = min(max(y0, 0), height - 1)
        yb = min(max(y0 + 1, 0), height - 1)
        row = []
        for j in range(out_w):
            pos_x = (j + 0.5) * scale_x - 0.5
            x0 = math.floor(pos_x)
            fx = pos_x - x0
            xa = min(max(x0, 0), width - 1)
            xb = min(max(x0 + 1, 0), width - 1)
            top = pixels[ya][xa] * (1 - fx) + pixels[ya][xb] * fx
            bottom = pixels[yb][xa] * (1 - fx) + pixels[yb][xb] * fx
            value = top * (1 - fy) + bottom * fy
            row.append(int(min(max(math.floor(value + 0.5), 0), 255)))
        out.append(row)
    return out


def motion_fraction_reference(prev, cur, pixel_delta: int) -> float:
    """Changed-pixel fraction by nested scalar loops (grayscale frames)."""
    changed = 0
    total = 0
    for row_prev, row_cur in zip(prev, cur):
        for a, b in zip(row_prev, row_cur):
            total += 1
            if abs(int(a) - int(b)) > pixel_delta:
                changed += 1
    return changed / total


def greedy_match_reference(
    scored_boxes: list[tuple[Box, float]],
    gt_boxes: list[Box],
    thr: float,
    iou_fn=grid_iou,
) -> tuple[int, int, int]:
    """Direct transcription of the one-image greedy matching rule.

    Predictions in descending score (stable); each claims the unmatched
    ground-truth box of highest IoU if that IoU >= thr.  Returns
    (tp, fp, fn).  The IoU itself comes from iou_fn (grid counting by
    default), keeping this route fully independent.
    """
    order = sorted(range(len(scored_boxes)), key=lambda i: -scored_boxes[i][1])
    matched = [False] * len(gt_boxes)
    tp = fp = 0
    for pred_index in order:
        box = scored_boxes[pred_index][0]
        best = -1
        best_iou = 0.0
        for gt_index, gt_box in enumerate(gt_boxes):
            if matched[gt_index]:
                continue
            overlap = iou_fn(box, gt_box)
            if overlap > best_iou:
                best = gt_index
                best_iou = overlap
        if best >= 0 and best_iou >= thr:
            matched[best] = True
            tp += 1
        else:
            fp += 1
    return tp, fp, matched.count(False)


def confusion_reference(scores, labels, thr: float) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) by one obvious pass."""
    tp = fp = fn = tn = 0
    for score, label in zip(scores, labels):
        if score >= thr:
            if label:
                tp += 1
            else:
                fp += 1
        elif label:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def pair_auc(scores, labels) -> float:
    """AUC as the fraction of correctly ordered positive/negative pairs,
    ties counted one half."""
    positives = [s for s, label in zip(scores, labels) if label]
    negatives = [s for s, label in zip(scores, labels) if not label]
    total = len(positives) * len(negatives)
    credit = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                credit += 1.0
            elif p == n:
                credit += 0.5
    return credit / total
