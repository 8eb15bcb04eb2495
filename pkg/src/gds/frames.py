"""Frame sources for the edge pipeline.

A frame source is any iterable of (timestamp_ms, pixels) pairs where pixels
is a uint8 array (grayscale 2-D or RGB 3-D), all frames share dimensions and
timestamps are monotonic.  Timestamps come from the source itself — a
synthetic clock for files and scripted scenes — so a run can be replayed
bit-for-bit.

Three sources live here: a directory of images, an adapter boundary for
video decoders (no codec ships with the package), and a scripted synthetic
scene that renders a rectangle bouncing over a flat background.  The scene
is the workhorse of the test suite: its geometry is exact, so expected
tracker behaviour can be computed by hand.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BoundingBox, GdsError
from .jpeg import read_image, write_jpeg

FrameStream = Iterator[tuple[int, np.ndarray]]

IMAGE_SUFFIXES = {".jpg", ".jpeg"}


class FrameSourceError(GdsError):
    """A frame source cannot produce frames (missing dir, empty, ...)."""


def directory_frames(path: Path | str, interval_ms: int = 40, start_ms: int = 0) -> FrameStream:
    """Frames from a directory of images, sorted by name.

    Timestamps are synthetic: start_ms, start_ms + interval_ms, ...  The
    sort makes the stream independent of directory read order.
    """
    path = Path(path)
    if not path.is_dir():
        raise FrameSourceError(f"frame directory not found: {path}")
    files = sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise FrameSourceError(f"no frames in {path}")
    for index, file in enumerate(files):
        yield start_ms + index * interval_ms, read_image(file)


class VideoDecoder(ABC):
    """Adapter boundary for container/codec decoding.

    The package ships no codec; deployments plug in a decoder (ffmpeg
    bindings, camera SDK, ...) and the pipeline stays unchanged.
    """

    @abstractmethod
    def frames(self, path: Path) -> Iterator[np.ndarray]:
        """Decode a video file into uint8 frame arrays, in order."""


def video_frames(
    decoder: VideoDecoder, path: Path | str, interval_ms: int = 40, start_ms: int = 0
) -> FrameStream:
    """Timestamp a decoder's frame sequence with a synthetic clock."""
    for index, frame in enumerate(decoder.frames(Path(path))):
        yield start_ms + index * interval_ms, frame


def _triangle(value: int, period: int) -> int:
    """Triangle wave: 0..period..0, no consecutive repeats for aligned steps."""
    if period <= 0:
        return 0
    m = value % (2 * period)
    return m if m <= period else 2 * period - m


@dataclass(frozen=True)
class SceneSpec:
    """A rectangle of `foreground` gray bouncing over a `background` field.

    The rectangle starts at (start_x, start_y) and advances by (step_x,
    step_y) each frame, reflecting off the frame edges.  Steps must divide
    the travel range exactly so the rectangle never pauses at a wall (a
    pause would read as a static scene and close the motion gate).
    """

    frames: int
    width: int = 640
    height: int = 360
    box_width: int = 64
    box_height: int = 64
    start_x: int = 0
    start_y: int = 148
    step_x: int = 16
    step_y: int = 0
    background: int = 96
    foreground: int = 230
    interval_ms: int = 40
    start_ms: int = 0

    def __post_init__(self) -> None:
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        for step, start, box, full, axis in (
            (self.step_x, self.start_x, self.box_width, self.width, "x"),
            (self.step_y, self.start_y, self.box_height, self.height, "y"),
        ):
            travel = full - box - start
            if travel < 0:
                raise ValueError(f"box does not fit the frame on the {axis} axis")
            if step > 0 and travel % step != 0:
                raise ValueError(f"step_{axis} must divide the travel range {travel}")
            if step < 0:
                raise ValueError(f"step_{axis} must be >= 0")

    def box_at(self, index: int) -> BoundingBox:
        x = self.start_x + _triangle(index * self.step_x, self.width - self.box_width - self.start_x)
        y = self.start_y + _triangle(index * self.step_y, self.height - self.box_height - self.start_y)
        return BoundingBox(x, y, x + self.box_width, y + self.box_height)

    def frame_at(self, index: int) -> np.ndarray:
        frame = np.full((self.height, self.width), self.background, dtype=np.uint8)
        box = self.box_at(index)
        frame[box.y_min : box.y_max, box.x_min : box.x_max] = self.foreground
        return frame

    def timestamp_at(self, index: int) -> int:
        return self.start_ms + index * self.interval_ms

    def stream(self) -> FrameStream:
        for index in range(self.frames):
            yield self.timestamp_at(index), self.frame_at(index)

    def oracle_script(self, score: float = 0.9) -> str:
        """Ground-truth detector script: one line per frame.

        Line format: frame_index<TAB>xmin,ymin,xmax,ymax<TAB>score, boxes in
        full-resolution coordinates.
        """
        lines = []
        for index in range(self.frames):
            box = self.box_at(index)
            lines.append(f"{index}\t{box.x_min},{box.y_min},{box.x_max},{box.y_max}\t{score}")
        return "\n".join(lines) + "\n"


def static_scene(frames: int, width: int = 640, height: int = 360) -> SceneSpec:
    """A scene whose rectangle never moves: every frame is identical."""
    return SceneSpec(frames=frames, width=width, height=height, step_x=0, step_y=0)


def write_frames(spec: SceneSpec, out_dir: Path | str) -> list[Path]:
    """Render a scene to frame_00000.jpg ... for directory_frames to read."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(spec.frames):
        path = out_dir / f"frame_{index:05d}.jpg"
        write_jpeg(path, spec.frame_at(index))
        paths.append(path)
    return paths
