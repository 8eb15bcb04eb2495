"""Geometry primitives and pipeline configuration shared by every stage.

Box convention used everywhere in this package: corners are continuous
pixel coordinates, the box spans [x_min, x_max) x [y_min, y_max), so
area = (x_max - x_min) * (y_max - y_min) and a box of width w covers
pixel columns x_min .. x_max - 1.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np


class GdsError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(GdsError):
    """A box or size violates its geometric constraints."""


class OutOfBoundsError(GeometryError):
    """A box does not fit inside the frame it is applied to."""


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in integer pixel coordinates, origin top-left."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, operator.index(getattr(self, name)))
        if self.x_min < 0 or self.y_min < 0:
            raise GeometryError(f"negative coordinates: {self.as_tuple()}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise GeometryError(f"empty box: {self.as_tuple()}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @classmethod
    def from_tuple(cls, coords) -> "BoundingBox":
        x1, y1, x2, y2 = coords
        return cls(x1, y1, x2, y2)


@dataclass(frozen=True)
class FrameSize:
    """Width and height of a frame in pixels."""

    width: int
    height: int

    def __post_init__(self):
        for name in ("width", "height"):
            object.__setattr__(self, name, operator.index(getattr(self, name)))
        if self.width <= 0 or self.height <= 0:
            raise GeometryError(f"non-positive frame size: {self.width}x{self.height}")

    @classmethod
    def of_array(cls, pixels: np.ndarray) -> "FrameSize":
        return cls(width=pixels.shape[1], height=pixels.shape[0])


@dataclass(frozen=True)
class Detection:
    """One detector output: a box plus a confidence score."""

    box: BoundingBox
    score: float
    class_label: str = "gun"

    def __post_init__(self):
        object.__setattr__(self, "score", float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score outside [0, 1]: {self.score}")


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable thresholds for the edge frame loop.

    Defaults: tracker association accepts IoU >= 0.3, a chip counts as a
    positive classification at score >= 0.5, and a track must collect 3
    positives before it fires.  Detection runs on frames downscaled by
    detect_scale; chips are cropped from the full-resolution frame at
    chip_size x chip_size.
    """

    iou_match_threshold: float = 0.3
    classifier_threshold: float = 0.5
    confirm_count: int = 3
    chip_size: int = 112
    detect_scale: int = 4
    motion_fraction_threshold: float = 0.005
    motion_pixel_delta: int = 25
    track_max_age: int = 10
    detect_stride: int = 1

    def __post_init__(self):
        for name in ("iou_match_threshold", "classifier_threshold", "motion_fraction_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if self.confirm_count < 1:
            raise ValueError("confirm_count must be >= 1")
        if self.detect_scale < 1:
            raise ValueError("detect_scale must be >= 1")
        if self.detect_stride < 1:
            raise ValueError("detect_stride must be >= 1")
        if self.chip_size < 1:
            raise ValueError("chip_size must be >= 1")
        if not 0 <= self.motion_pixel_delta <= 255:
            raise ValueError("motion_pixel_delta must be an 8-bit delta")
        if self.track_max_age < 0:
            raise ValueError("track_max_age must be >= 0")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def scale_box(box: BoundingBox, src: FrameSize, dst: FrameSize) -> BoundingBox:
    """Map a box between frame resolutions.

    Coordinates are multiplied by the per-axis size ratio, rounded to the
    nearest integer (halves round up) and clamped into dst.  Raises
    GeometryError if rounding collapses the box to zero area.
    """
    if box.x_max > src.width or box.y_max > src.height:
        raise OutOfBoundsError(f"box {box.as_tuple()} exceeds {src.width}x{src.height}")
    sx = dst.width / src.width
    sy = dst.height / src.height
    x_min = min(max(_round_half_up(box.x_min * sx), 0), dst.width)
    x_max = min(max(_round_half_up(box.x_max * sx), 0), dst.width)
    y_min = min(max(_round_half_up(box.y_min * sy), 0), dst.height)
    y_max = min(max(_round_half_up(box.y_max * sy), 0), dst.height)
    if x_min >= x_max or y_min >= y_max:
        raise GeometryError(
            f"box {box.as_tuple()} degenerates when scaled "
            f"from {src.width}x{src.height} to {dst.width}x{dst.height}"
        )
    return BoundingBox(x_min, y_min, x_max, y_max)


def _axis_samples(src_len: int, out_len: int):
    # Center-aligned sampling; out-of-range neighbours clamp to the edge.
    pos = (np.arange(out_len) + 0.5) * (src_len / out_len) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    return np.clip(lo, 0, src_len - 1), np.clip(lo + 1, 0, src_len - 1), frac


def resize_bilinear(pixels: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Resample an image to a new size with plain bilinear interpolation.

    Sample centers sit at (i + 0.5) * (src/out) - 0.5 per axis, with the
    per-axis ratio evaluated once.  No anti-alias prefilter: the operation
    is a deterministic function of the four neighbouring source pixels of
    each sample point.
    """
    src = pixels.astype(np.float64)
    y0, y1, wy = _axis_samples(pixels.shape[0], out_height)
    x0, x1, wx = _axis_samples(pixels.shape[1], out_width)
    if src.ndim == 3:
        wx = wx[None, :, None]
        wy = wy[:, None, None]
    else:
        wx = wx[None, :]
        wy = wy[:, None]
    top = src[y0][:, x0] * (1.0 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1.0 - wx) + src[y1][:, x1] * wx
    blended = top * (1.0 - wy) + bottom * wy
    return np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)


def crop_and_resize(frame: np.ndarray, box: BoundingBox, out_size: int) -> np.ndarray:
    """Cut the box region out of a frame and stretch it to a square chip.

    Aspect ratio is not preserved; the crop is resampled to
    out_size x out_size with bilinear interpolation.
    """
    if frame.ndim not in (2, 3):
        raise ValueError(f"expected 2-d or 3-d pixel array, got shape {frame.shape}")
    height, width = frame.shape[:2]
    if box.x_max > width or box.y_max > height:
        raise OutOfBoundsError(f"box {box.as_tuple()} outside frame {width}x{height}")
    region = frame[box.y_min:box.y_max, box.x_min:box.x_max]
    if region.shape[0] == out_size and region.shape[1] == out_size:
        return region.astype(np.uint8, copy=True)
    return resize_bilinear(region, out_size, out_size)
