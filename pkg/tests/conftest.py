"""Shared fixtures plus the acceptance summary.

The terminal summary prints one PASS/FAIL line per acceptance criterion
(the tests in test_acceptance.py), labeled by each test's docstring.
"""

from __future__ import annotations

import numpy as np
import pytest

from gds.dataset import AnnotationRecord, serialize_annotation
from gds.jpeg import write_jpeg

_ACCEPTANCE_LABELS: dict[str, str] = {}
_ACCEPTANCE_OUTCOMES: dict[str, str] = {}


def pytest_itemcollected(item):
    if item.module and item.module.__name__ == "test_acceptance":
        doc = (item.obj.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE_LABELS[item.nodeid] = doc


def pytest_runtest_logreport(report):
    if report.nodeid not in _ACCEPTANCE_LABELS:
        return
    if report.when == "call":
        _ACCEPTANCE_OUTCOMES[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup":
        if report.skipped:
            _ACCEPTANCE_OUTCOMES[report.nodeid] = "SKIP"
        elif report.failed:
            _ACCEPTANCE_OUTCOMES[report.nodeid] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LABELS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_LABELS):
        outcome = _ACCEPTANCE_OUTCOMES.get(nodeid, "NOT RUN")
        terminalreporter.write_line(f"{outcome:>4}  {_ACCEPTANCE_LABELS[nodeid]}")


def flat_image(width: int, height: int, value: int = 128) -> np.ndarray:
    return np.full((height, width), value, dtype=np.uint8)


def write_annotated_image(root, relpath: str, record: AnnotationRecord, value: int = 128):
    """Write one image + its annotation in the JpegImages/Annotations layout."""
    image_path = root / relpath
    image_path.parent.mkdir(parents=True, exist_ok=True)
    write_jpeg(image_path, flat_image(record.width, record.height, value))
    xml_path = image_path.parent.parent / "Annotations" / (image_path.stem + ".xml")
    xml_path.parent.mkdir(parents=True, exist_ok=True)
    xml_path.write_bytes(serialize_annotation(record))
    return image_path, xml_path


def record(filename: str, width: int, height: int, boxes, label: str = "gun") -> AnnotationRecord:
    return AnnotationRecord(
        filename=filename,
        width=width,
        height=height,
        depth=3,
        objects=tuple((label, tuple(box)) for box in boxes),
    )


@pytest.fixture
def mini_tree(tmp_path):
    """A clean synthetic tree: 3 annotated detector/gun pairs (5 boxes
    total), 2 detector/other, 1 classifier/gun, 1 classifier/other."""
    root = tmp_path / "dataset"
    gun_dir = root / "detector" / "gun" / "train"
    write_annotated_image(
        root, "detector/gun/train/JpegImages/a.jpg", record("a.jpg", 120, 90, [(10, 20, 50, 60)])
    )
    write_annotated_image(
        root,
        "detector/gun/train/JpegImages/b.jpg",
        record("b.jpg", 160, 120, [(0, 0, 40, 30), (80, 60, 120, 100)]),
    )
    write_annotated_image(
        root,
        "detector/gun/test/JpegImages/c.jpg",
        record("c.jpg", 200, 150, [(5, 5, 25, 25), (100, 100, 180, 140)]),
    )
    for name in ("x.jpg", "y.jpg"):
        path = root / "detector" / "other" / name
        path.parent.mkdir(parents=True, exist_ok=True)
        write_jpeg(path, flat_image(64, 48, 90))
    chip_gun = root / "classifier" / "gun" / "g0.jpg"
    chip_gun.parent.mkdir(parents=True, exist_ok=True)
    write_jpeg(chip_gun, flat_image(112, 112, 200))
    chip_other = root / "classifier" / "other" / "o0.jpg"
    chip_other.parent.mkdir(parents=True, exist_ok=True)
    write_jpeg(chip_other, flat_image(112, 112, 40))
    assert gun_dir.is_dir()
    return root
