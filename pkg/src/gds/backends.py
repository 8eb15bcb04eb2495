"""Pluggable detector and classifier backends.

The pipeline never touches a neural network directly; it calls these two
interfaces.  Real model runtimes (NNIE, onnxruntime, ...) plug in behind
them, and the test suite plugs in oracles: a detector scripted with ground
truth per frame index and classifiers with canned scores.

Scripted backends need to know which frame the pipeline is on (the detector
is not invoked on motion-inactive frames, so counting detect() calls would
drift).  The pipeline calls advance(frame_index) on any backend that
defines it, once per frame, before the motion gate.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence

import numpy as np

from .core import BoundingBox, Detection, FrameSize, GdsError, scale_box


class ScriptError(GdsError):
    """An oracle script line does not match the expected format."""


class DetectorBackend(ABC):
    """Detector slot: frame in, final scored boxes out (NMS already applied)."""

    @abstractmethod
    def detect(self, frame: np.ndarray) -> list[Detection]:
        """Return detections with boxes inside the given frame."""


class ClassifierBackend(ABC):
    """Classifier slot: chip in, gun score in [0, 1] out."""

    @abstractmethod
    def classify(self, chip: np.ndarray) -> float:
        """Return the gun score for one chip."""


class NullBackend(DetectorBackend):
    """Detects nothing; used for throughput measurement."""

    def detect(self, frame: np.ndarray) -> list[Detection]:
        return []


def parse_oracle_script(text: str) -> dict[int, list[tuple[BoundingBox, float]]]:
    """Parse a ground-truth script.

    One detection per line: frame_index<TAB>xmin,ymin,xmax,ymax<TAB>score.
    Blank lines and #-comments are skipped.  Boxes are in full-resolution
    scene coordinates.
    """
    script: dict[int, list[tuple[BoundingBox, float]]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ScriptError(f"line {line_no}: expected 3 tab-separated fields, got {len(parts)}")
        try:
            index = int(parts[0])
            coords = tuple(int(c) for c in parts[1].split(","))
            score = float(parts[2])
        except ValueError as exc:
            raise ScriptError(f"line {line_no}: {exc}") from exc
        if len(coords) != 4:
            raise ScriptError(f"line {line_no}: box needs 4 coordinates, got {len(coords)}")
        script.setdefault(index, []).append((BoundingBox.from_tuple(coords), score))
    return script


class OracleBackend(DetectorBackend):
    """Detector scripted with ground truth, keyed by frame index.

    Script boxes are in full-resolution coordinates; detect() maps them into
    whatever resolution the pipeline hands it (the downscaled detection
    frame), so the oracle behaves like a detector at any detect_scale.
    """

    def __init__(
        self,
        script: dict[int, list[tuple[BoundingBox, float]]],
        full_size: FrameSize,
    ):
        self._script = script
        self._full_size = full_size
        self._frame_index = 0

    @classmethod
    def from_text(cls, text: str, full_size: FrameSize) -> OracleBackend:
        return cls(parse_oracle_script(text), full_size)

    def advance(self, frame_index: int) -> None:
        self._frame_index = frame_index

    def detect(self, frame: np.ndarray) -> list[Detection]:
        detections = []
        for box, score in self._script.get(self._frame_index, []):
            scaled = scale_box(box, self._full_size, FrameSize.of_array(frame))
            detections.append(Detection(box=scaled, score=score))
        return detections


class ConstantClassifier(ClassifierBackend):
    """Returns the same score for every chip."""

    def __init__(self, score: float):
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"classifier score must be in [0, 1], got {score}")
        self._score = score

    def classify(self, chip: np.ndarray) -> float:
        return self._score


class OracleClassifier(ClassifierBackend):
    """Returns a canned score sequence in call order, then `default`."""

    def __init__(self, scores: Sequence[float] | Iterable[float], default: float = 0.0):
        self._scores = list(scores)
        self._default = float(default)
        self._calls = 0

    def classify(self, chip: np.ndarray) -> float:
        score = self._scores[self._calls] if self._calls < len(self._scores) else self._default
        self._calls += 1
        return score
