"""Edge state machine: motion gate, tracker, confirmation, frame loop, queue."""

from __future__ import annotations

import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gds.backends import ConstantClassifier, NullBackend, OracleBackend, OracleClassifier
from gds.core import BoundingBox, Detection, FrameSize, PipelineConfig
from gds.edge import (
    EventQueue,
    GunEvent,
    PipelineError,
    Track,
    associate,
    confirm_step,
    motion_gate,
    run_pipeline,
)
from gds.frames import SceneSpec, static_scene
from oracles import grid_iou, motion_fraction_reference


def gray(value: int, width: int = 100, height: int = 100) -> np.ndarray:
    return np.full((height, width), value, dtype=np.uint8)


CFG = PipelineConfig()


class TestMotionGate:
    def test_identical_frames_inactive(self):
        frame = gray(128)
        result = motion_gate(frame, frame.copy(), CFG)
        assert result.changed_fraction == 0.0
        assert not result.active

    def test_black_vs_white_saturates(self):
        result = motion_gate(gray(0), gray(255), CFG)
        assert result.changed_fraction == 1.0
        assert result.active

    def test_block_delta_matches_reference(self):
        prev = gray(20)
        cur = prev.copy()
        cur[10:20, 30:40] = 220  # one 10x10 block, delta 200
        result = motion_gate(prev, cur, CFG)
        assert result.changed_fraction == 0.01
        assert result.changed_fraction == motion_fraction_reference(prev, cur, CFG.motion_pixel_delta)
        assert result.active  # 0.01 >= 0.005

    def test_delta_at_threshold_not_counted(self):
        prev = gray(100)
        cur = prev.copy()
        cur[:50] = 125  # delta exactly 25: strictly-greater rule says unchanged
        assert motion_gate(prev, cur, CFG).changed_fraction == 0.0

    def test_delta_one_past_threshold_counted(self):
        prev = gray(100)
        cur = prev.copy()
        cur[:50] = 126
        assert motion_gate(prev, cur, CFG).changed_fraction == 0.5

    def test_fraction_at_threshold_is_active(self):
        # 50 of 10000 pixels = exactly the 0.005 default threshold.
        prev = gray(0)
        cur = prev.copy()
        cur[0, :50] = 255
        result = motion_gate(prev, cur, CFG)
        assert result.changed_fraction == CFG.motion_fraction_threshold
        assert result.active

    def test_rgb_uses_luma(self):
        prev = np.zeros((10, 10, 3), dtype=np.uint8)
        cur = prev.copy()
        cur[..., 2] = 255  # blue-only change: luma delta round(255*0.114) = 29 > 25
        assert motion_gate(prev, cur, CFG).changed_fraction == 1.0
        cur2 = prev.copy()
        cur2[..., 2] = 200  # luma delta round(200*0.114) = 23 <= 25
        assert motion_gate(prev, cur2, CFG).changed_fraction == 0.0

    def test_shape_mismatch_raises(self):
        with pytest.raises(PipelineError):
            motion_gate(gray(0, 10, 10), gray(0, 12, 10), CFG)

    @given(
        st.integers(0, 255),
        st.integers(0, 255),
        st.integers(1, 12),
        st.integers(1, 12),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_reference_on_two_level_frames(self, a, b, w, h):
        rng = np.random.default_rng(a * 256 + b)
        prev = rng.choice([a, b], size=(h, w)).astype(np.uint8)
        cur = rng.choice([a, b], size=(h, w)).astype(np.uint8)
        result = motion_gate(prev, cur, CFG)
        expected = motion_fraction_reference(prev, cur, CFG.motion_pixel_delta)
        assert result.changed_fraction == expected
        assert result.active == (expected >= CFG.motion_fraction_threshold)


def det(box: tuple[int, int, int, int], score: float = 0.9) -> Detection:
    return Detection(box=BoundingBox.from_tuple(box), score=score)


class TestAssociate:
    def test_first_detection_spawns_track(self):
        result = associate([], [det((0, 0, 10, 10))], CFG)
        assert len(result.tracks) == 1
        assert result.tracks[0].track_id == 0
        assert result.next_track_id == 1

    def test_overlapping_detection_matches(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 10), age_since_update=2)
        detection = det((0, 0, 10, 6))
        assert grid_iou((0, 0, 10, 10), (0, 0, 10, 6)) == 0.6
        result = associate([track], [detection], CFG)
        assert result.tracks == [track]
        assert track.box == detection.box
        assert track.age_since_update == 0
        assert result.matched == [(track, detection)]

    def test_disjoint_detection_spawns_and_ages(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 10))
        result = associate([track], [det((50, 50, 60, 60))], CFG, next_track_id=1)
        assert track.age_since_update == 1
        assert [t.track_id for t in result.tracks] == [0, 1]
        assert result.next_track_id == 2

    def test_below_threshold_iou_spawns(self):
        # IoU 2/18 = 0.111 < 0.3: no match even though boxes overlap.
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 1))
        result = associate([track], [det((8, 0, 18, 1))], CFG, next_track_id=1)
        assert grid_iou((0, 0, 10, 1), (8, 0, 18, 1)) == pytest.approx(2 / 18)
        assert len(result.tracks) == 2

    def test_greedy_descending_score(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 10))
        low = det((0, 0, 10, 10), score=0.5)
        high = det((0, 0, 10, 8), score=0.9)
        result = associate([track], [low, high], CFG, next_track_id=1)
        # The higher-scored detection claims the track despite lower IoU.
        assert track.box == high.box
        spawned = [t for t in result.tracks if t.track_id == 1]
        assert spawned[0].box == low.box

    def test_one_track_claimed_once(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 10))
        a = det((0, 0, 10, 9), score=0.9)
        b = det((0, 0, 10, 8), score=0.8)
        result = associate([track], [a, b], CFG, next_track_id=1)
        assert len(result.tracks) == 2

    def test_track_dropped_past_max_age(self):
        cfg = PipelineConfig(track_max_age=1)
        track = Track(track_id=0, box=BoundingBox(0, 0, 10, 10))
        result = associate([track], [], cfg)
        assert result.tracks == [track] and track.age_since_update == 1
        result = associate(result.tracks, [], cfg)
        assert result.tracks == []

    def test_fresh_track_not_aged(self):
        result = associate([], [det((0, 0, 4, 4))], PipelineConfig(track_max_age=0))
        assert result.tracks[0].age_since_update == 0


class TestConfirmStep:
    def test_fires_exactly_on_third_positive(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        assert confirm_step(track, 0.9, CFG) is False
        assert confirm_step(track, 0.9, CFG) is False
        assert confirm_step(track, 0.9, CFG) is True
        assert track.confirmed and track.reported

    def test_negative_does_not_reset_counter(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        fires = [confirm_step(track, s, CFG) for s in (0.9, 0.2, 0.9, 0.2, 0.9)]
        assert fires == [False, False, False, False, True]
        assert track.positive_classifications == 3

    def test_two_positives_no_fire(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        assert not confirm_step(track, 0.9, CFG)
        assert not confirm_step(track, 0.2, CFG)
        assert track.positive_classifications == 1

    def test_fires_at_most_once(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        fires = [confirm_step(track, 0.9, CFG) for _ in range(6)]
        assert fires == [False, False, True, False, False, False]

    def test_score_at_threshold_is_positive(self):
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        confirm_step(track, CFG.classifier_threshold, CFG)
        assert track.positive_classifications == 1

    def test_confirm_count_one_fires_immediately(self):
        cfg = PipelineConfig(confirm_count=1)
        track = Track(track_id=0, box=BoundingBox(0, 0, 4, 4))
        assert confirm_step(track, 0.9, cfg) is True


def make_event(tag: int) -> GunEvent:
    pixels = np.full((4, 4), tag % 256, dtype=np.uint8)
    return GunEvent(
        device_id="edge0",
        timestamp_ms=tag * 40,
        track_id=tag,
        box=BoundingBox(0, 0, 4, 4),
        detector_score=0.9,
        chip=pixels,
        snapshot=pixels,
    )


class TestEventQueue:
    def test_delivers_in_order(self):
        seen = []
        queue = EventQueue(lambda e: seen.append(e.track_id))
        for tag in range(5):
            queue.put(make_event(tag))
        queue.close()
        assert seen == [0, 1, 2, 3, 4]
        assert queue.delivered == 5
        assert queue.dropped == 0 and queue.undelivered == 0

    def test_overflow_drops_oldest(self):
        started = threading.Event()
        release = threading.Event()
        seen = []

        def sink(event):
            started.set()
            release.wait(timeout=5)
            seen.append(event.track_id)

        queue = EventQueue(sink, maxlen=2)
        queue.put(make_event(0))
        assert started.wait(timeout=5)  # worker holds event 0 outside the deque
        queue.put(make_event(1))
        queue.put(make_event(2))
        queue.put(make_event(3))  # deque full: event 1 dropped
        release.set()
        queue.close()
        assert seen == [0, 2, 3]
        assert queue.dropped == 1
        assert queue.delivered == 3

    def test_failed_delivery_retried_in_place(self):
        calls = []

        def sink(event):
            calls.append(event.track_id)
            if len(calls) < 3:
                raise ConnectionError("down")

        queue = EventQueue(sink, max_attempts=3)
        queue.put(make_event(7))
        queue.put(make_event(8))
        queue.close()
        # Event 7 fails twice and succeeds on its final attempt, all before
        # event 8 is attempted: retries preserve FIFO order.
        assert calls == [7, 7, 7, 8]
        assert queue.delivered == 2
        assert queue.undelivered == 0

    def test_exhausted_attempts_counted_undelivered(self):
        def sink(event):
            raise ConnectionError("down")

        queue = EventQueue(sink, max_attempts=3)
        queue.put(make_event(1))
        queue.put(make_event(2))
        queue.close()
        assert queue.undelivered == 2
        assert queue.delivered == 0


def scene_run(frames: int = 20, classifier_score: float = 0.9, cfg: PipelineConfig = CFG):
    spec = SceneSpec(frames=frames)
    detector = OracleBackend.from_text(spec.oracle_script(), FrameSize(spec.width, spec.height))
    events: list[GunEvent] = []
    summary = run_pipeline(
        spec.stream(), detector, ConstantClassifier(classifier_score), cfg, events.append
    )
    return spec, summary, events


class TestRunPipeline:
    def test_static_stream_never_detects(self):
        spec = static_scene(100)
        detector = NullBackend()
        invocations = []
        original = detector.detect
        detector.detect = lambda frame: invocations.append(1) or original(frame)
        summary = run_pipeline(spec.stream(), detector, ConstantClassifier(0.9), CFG, lambda e: None)
        assert summary.frames == 100
        assert summary.detector_invocations == 0
        assert invocations == []
        assert summary.events == 0

    def test_scripted_scene_fires_once_on_third_detection_frame(self):
        spec, summary, events = scene_run()
        # Frame 0 is motion-inactive (no predecessor); detection frames are
        # 1, 2, 3, ... so the third positive classification lands on frame 3.
        assert summary.frames == 20
        assert summary.detector_invocations == 19
        assert summary.events == 1
        assert summary.tracks_created == 1
        assert len(events) == 1
        event = events[0]
        assert event.timestamp_ms == spec.timestamp_at(3)
        assert event.track_id == 0
        assert event.box == spec.box_at(3)  # 0 px error, inside the ±1 budget
        assert event.chip.shape == (CFG.chip_size, CFG.chip_size)
        assert event.snapshot.shape == (spec.height, spec.width)

    def test_low_classifier_score_fires_nothing(self):
        _, summary, events = scene_run(classifier_score=0.4)
        assert summary.events == 0
        assert events == []
        assert summary.detector_invocations == 19

    def test_replay_is_deterministic(self):
        _, _, first = scene_run(frames=40)
        _, _, second = scene_run(frames=40)
        assert len(first) == len(second) == 1
        a, b = first[0], second[0]
        assert (a.device_id, a.timestamp_ms, a.track_id, a.box, a.detector_score) == (
            b.device_id,
            b.timestamp_ms,
            b.track_id,
            b.box,
            b.detector_score,
        )
        assert np.array_equal(a.chip, b.chip)
        assert np.array_equal(a.snapshot, b.snapshot)

    def test_at_most_one_event_per_track(self):
        _, summary, events = scene_run(frames=200)
        assert summary.tracks_created == 1
        assert summary.events == 1
        assert len({e.track_id for e in events}) == len(events)

    def test_counter_inequalities(self):
        _, summary, _ = scene_run(frames=50)
        assert summary.events <= summary.tracks_created
        assert summary.tracks_created <= summary.detector_invocations

    def test_detect_stride_halves_invocations(self):
        cfg = PipelineConfig(detect_stride=2)
        _, summary, _ = scene_run(frames=20, cfg=cfg)
        # 19 motion-active frames, detector runs on the 1st, 3rd, ... -> 10.
        assert summary.detector_invocations == 10

    def test_nonmonotonic_timestamps_rejected(self):
        frame = gray(10)
        moved = frame.copy()
        moved[:, :50] = 200
        stream = [(0, frame), (40, moved), (20, frame)]
        with pytest.raises(PipelineError, match="monotonic"):
            run_pipeline(iter(stream), NullBackend(), ConstantClassifier(0.9), CFG, lambda e: None)

    def test_classifier_sequence_delays_confirmation(self):
        spec = SceneSpec(frames=20)
        detector = OracleBackend.from_text(spec.oracle_script(), FrameSize(spec.width, spec.height))
        classifier = OracleClassifier([0.9, 0.1, 0.9, 0.1, 0.9], default=0.0)
        events = []
        run_pipeline(spec.stream(), detector, classifier, CFG, events.append)
        # Positives land on detection frames 1, 3, 5 -> fire on frame 5.
        assert [e.timestamp_ms for e in events] == [spec.timestamp_at(5)]

    def test_failing_sink_counts_undelivered(self):
        spec = SceneSpec(frames=20)
        detector = OracleBackend.from_text(spec.oracle_script(), FrameSize(spec.width, spec.height))

        def sink(event):
            raise ConnectionError("uplink down")

        summary = run_pipeline(spec.stream(), detector, ConstantClassifier(0.9), CFG, sink)
        assert summary.events == 1
        assert summary.events_undelivered == 1
        assert summary.events_delivered == 0

    def test_delivered_counter_matches_events(self):
        _, summary, events = scene_run()
        assert summary.events_delivered == len(events) == 1
        assert summary.events_dropped == 0

    def test_stage_timings_present(self):
        _, summary, _ = scene_run(frames=10)
        assert set(summary.stage_seconds) == {"motion", "detect", "track", "classify"}
        assert all(v >= 0.0 for v in summary.stage_seconds.values())

    def test_empty_stream(self):
        summary = run_pipeline(iter([]), NullBackend(), ConstantClassifier(0.9), CFG, lambda e: None)
        assert summary.frames == 0
        assert summary.events == 0
