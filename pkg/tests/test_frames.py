"""Frame sources and the synthetic bouncing-box scene."""

from __future__ import annotations

import numpy as np
import pytest

from gds.core import BoundingBox
from gds.frames import (
    FrameSourceError,
    SceneSpec,
    directory_frames,
    static_scene,
    write_frames,
)
from gds.jpeg import write_jpeg


class TestDirectoryFrames:
    def test_sorted_order_and_timestamps(self, tmp_path):
        for name in ("b.jpg", "a.jpg", "c.jpg"):
            write_jpeg(tmp_path / name, np.full((8, 8), 90, dtype=np.uint8))
        frames = list(directory_frames(tmp_path, interval_ms=40))
        assert [ts for ts, _ in frames] == [0, 40, 80]
        assert all(frame.shape == (8, 8) for _, frame in frames)

    def test_empty_directory_raises(self, tmp_path):
        with pytest.raises(FrameSourceError):
            list(directory_frames(tmp_path))

    def test_missing_directory_raises(self, tmp_path):
        with pytest.raises(FrameSourceError):
            list(directory_frames(tmp_path / "nope"))


class TestSceneSpec:
    def test_defaults_are_motion_safe(self):
        spec = SceneSpec(frames=10)
        # One step changes box_height * step_x pixels twice over (vacated +
        # newly covered): 2 * 64 * 16 = 2048 of 230400 = 0.0089 >= 0.005.
        changed = 2 * spec.box_height * spec.step_x
        assert changed / (spec.width * spec.height) >= 0.005

    def test_box_at_zero_is_start(self):
        spec = SceneSpec(frames=1)
        assert spec.box_at(0) == BoundingBox(
            spec.start_x, spec.start_y, spec.start_x + spec.box_width, spec.start_y + spec.box_height
        )

    def test_box_moves_every_frame(self):
        spec = SceneSpec(frames=200)
        previous = spec.box_at(0)
        for index in range(1, spec.frames):
            current = spec.box_at(index)
            assert current != previous
            previous = current

    def test_box_stays_in_bounds(self):
        spec = SceneSpec(frames=500)
        for index in range(spec.frames):
            box = spec.box_at(index)
            assert 0 <= box.x_min < box.x_max <= spec.width
            assert 0 <= box.y_min < box.y_max <= spec.height

    def test_bounce_reverses_direction(self):
        spec = SceneSpec(frames=100)
        travel = spec.width - spec.box_width - spec.start_x
        period = travel // spec.step_x
        assert spec.box_at(period).x_min == spec.start_x + travel
        assert spec.box_at(period + 1).x_min == spec.start_x + travel - spec.step_x

    def test_frame_pixels_match_box(self):
        spec = SceneSpec(frames=5)
        frame = spec.frame_at(3)
        box = spec.box_at(3)
        assert frame.shape == (spec.height, spec.width)
        assert (frame[box.y_min : box.y_max, box.x_min : box.x_max] == spec.foreground).all()
        assert int((frame == spec.background).sum()) == frame.size - box.area

    def test_stream_timestamps(self):
        stream = list(SceneSpec(frames=4, interval_ms=25).stream())
        assert [ts for ts, _ in stream] == [0, 25, 50, 75]

    def test_oracle_script_lines(self):
        spec = SceneSpec(frames=3)
        lines = spec.oracle_script(score=0.75).strip().splitlines()
        assert len(lines) == 3
        index, coords, score = lines[1].split("\t")
        assert index == "1"
        assert score == "0.75"
        assert BoundingBox.from_tuple(int(v) for v in coords.split(",")) == spec.box_at(1)

    def test_step_must_divide_travel(self):
        with pytest.raises(ValueError, match="divide"):
            SceneSpec(frames=2, width=641)

    def test_box_must_fit(self):
        with pytest.raises(ValueError, match="fit"):
            SceneSpec(frames=2, height=100)

    def test_coordinates_stay_on_detect_grid(self):
        # Every coordinate the default scene produces is a multiple of 4, so
        # a divide-by-4 downscale followed by an upscale is exact.
        spec = SceneSpec(frames=300)
        for index in range(0, spec.frames, 7):
            assert all(v % 4 == 0 for v in spec.box_at(index).as_tuple())


class TestStaticScene:
    def test_identical_frames(self):
        frames = list(static_scene(5).stream())
        assert len(frames) == 5
        first = frames[0][1]
        for _, frame in frames[1:]:
            assert (frame == first).all()

    def test_timestamps_advance(self):
        spec = static_scene(3)
        frames = list(spec.stream())
        assert [ts for ts, _ in frames] == [0, 40, 80]


class TestWriteFrames:
    def test_writes_numbered_jpegs(self, tmp_path):
        spec = SceneSpec(frames=3)
        paths = write_frames(spec, tmp_path)
        assert [p.name for p in paths] == [
            "frame_00000.jpg",
            "frame_00001.jpg",
            "frame_00002.jpg",
        ]
        frames = list(directory_frames(tmp_path, interval_ms=spec.interval_ms))
        assert len(frames) == 3
        assert frames[0][1].shape == (360, 640)
