"""Command line entry point.

One multiplexed binary: `gds dataset|edge|server|eval|proto ...`.  Exit
codes are stable: 0 success, 1 validation findings, 2 usage error, 3
runtime error.  Every flag can also come from the environment with prefix
GDS_ (flags win over environment, environment wins over config files).

Stdout carries the report (byte-identical across identical invocations,
except `eval bench`, which prints measurements); diagnostics go to stderr.
"""

from __future__ import annotations

import hashlib
import itertools
import sys
from pathlib import Path

import click

from . import dataset as ds
from . import evaluation as ev
from . import reports
from .backends import ConstantClassifier, NullBackend, OracleBackend
from .core import BoundingBox, FrameSize, GdsError, PipelineConfig
from .edge import run_pipeline
from .frames import SceneSpec, directory_frames, static_scene
from .jpeg import looks_like_jpeg
from .protocol import DetectionReport, UplinkClient, decode_report, encode_report
from .server.app import build_app
from .server.config import ServerConfig


class _Root(click.Group):
    """Maps domain errors to exit code 3 (usage errors stay at click's 2)."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except GdsError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(3)


@click.group(cls=_Root)
@click.version_option(package_name="gds")
def cli() -> None:
    """Edge/cloud gun detection toolkit."""


def main() -> None:
    cli(auto_envvar_prefix="GDS")


# ---------------------------------------------------------------- dataset


@cli.group("dataset")
def dataset_group() -> None:
    """Scan, validate, analyze, and transform dataset trees."""


@dataset_group.command("scan")
@click.option("--root", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
def dataset_scan(root: Path) -> None:
    """Index a tree and print per-category image counts."""
    index = ds.scan_dataset(root)
    for category in ds.CATEGORIES:
        click.echo(f"{category}\t{index.counts.get(category, 0)}")
    click.echo(f"findings\t{len(index.findings)}")


@dataset_group.command("validate")
@click.option("--root", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
def dataset_validate(root: Path) -> None:
    """Run the quality gate; exit 1 if any finding is reported."""
    findings = ds.validate(ds.scan_dataset(root))
    for finding in findings:
        click.echo(str(finding))
    click.echo(f"findings\t{len(findings)}")
    if findings:
        sys.exit(1)


@dataset_group.command("stats")
@click.option("--root", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--split", type=click.Choice(["train", "test"]), default=None)
@click.option("--kv", is_flag=True, help="Machine-readable key<TAB>value lines.")
@click.option("--plot", type=click.Path(dir_okay=False, path_type=Path), default=None)
def dataset_stats(root: Path, split: str | None, kv: bool, plot: Path | None) -> None:
    """Histogram image sizes, gun box sizes, and objects per image."""
    report = ds.compute_stats(ds.scan_dataset(root), split=split)
    click.echo(reports.stats_kv(report) if kv else reports.stats_table(report), nl=False)
    if plot is not None:
        reports.plot_stats(report, plot)
        click.echo(f"plot written to {plot}", err=True)


@dataset_group.command("chips")
@click.option("--root", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--size", type=int, default=112, show_default=True)
def dataset_chips(root: Path, out: Path, size: int) -> None:
    """Cut one chip JPEG per annotated box."""
    result = ds.extract_chips(ds.scan_dataset(root), out, size=size)
    for finding in result.findings:
        click.echo(str(finding), err=True)
    click.echo(f"chips\t{result.written}")


@dataset_group.command("split")
@click.option("--root", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def dataset_split(root: Path, out: Path, test_fraction: float, seed: int) -> None:
    """Write stratified train.txt/test.txt manifests."""
    result = ds.split(ds.scan_dataset(root), test_fraction, seed)
    ds.write_split_manifests(result, out)
    click.echo(f"train\t{len(result.train)}")
    click.echo(f"test\t{len(result.test)}")


# ------------------------------------------------------------------- edge


def _pipeline_options(fn):
    options = [
        click.option("--iou-threshold", type=float, default=0.3, show_default=True),
        click.option("--classifier-threshold", type=float, default=0.5, show_default=True),
        click.option("--confirm-count", type=int, default=3, show_default=True),
        click.option("--chip-size", type=int, default=112, show_default=True),
        click.option("--detect-scale", type=int, default=4, show_default=True),
        click.option("--motion-fraction", type=float, default=0.005, show_default=True),
        click.option("--pixel-delta", type=int, default=25, show_default=True),
        click.option("--track-max-age", type=int, default=10, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config_from_flags(
    iou_threshold: float,
    classifier_threshold: float,
    confirm_count: int,
    chip_size: int,
    detect_scale: int,
    motion_fraction: float,
    pixel_delta: int,
    track_max_age: int,
) -> PipelineConfig:
    return PipelineConfig(
        iou_match_threshold=iou_threshold,
        classifier_threshold=classifier_threshold,
        confirm_count=confirm_count,
        chip_size=chip_size,
        detect_scale=detect_scale,
        motion_fraction_threshold=motion_fraction,
        motion_pixel_delta=pixel_delta,
        track_max_age=track_max_age,
    )


@cli.group("edge")
def edge_group() -> None:
    """Run the on-device pipeline."""


@edge_group.command("run")
@click.option("--frames", "frames_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--oracle", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Ground-truth detector script: frame_index<TAB>box<TAB>score.")
@click.option("--sink", default=None, help="Ingest base URL; omit for a dry run.")
@click.option("--device", default="edge0", show_default=True)
@click.option("--token", default=None, help="Bearer token for the sink.")
@click.option("--interval-ms", type=int, default=40, show_default=True)
@click.option("--classifier-score", type=float, default=1.0, show_default=True,
              help="Constant edge classifier score (real NN backends plug in via the API).")
@_pipeline_options
def edge_run(
    frames_dir: Path,
    oracle: Path,
    sink: str | None,
    device: str,
    token: str | None,
    interval_ms: int,
    classifier_score: float,
    **cfg_flags,
) -> None:
    """Replay a frame directory through the full state machine."""
    cfg = _config_from_flags(**cfg_flags)
    stream = directory_frames(frames_dir, interval_ms=interval_ms)
    first = next(stream)
    full_size = FrameSize.of_array(first[1])
    frames = itertools.chain([first], stream)
    detector = OracleBackend.from_text(oracle.read_text(), full_size)
    classifier = ConstantClassifier(classifier_score)
    client = UplinkClient(sink, token=token) if sink else None
    sink_fn = client.deliver_event if client else (lambda event: None)
    try:
        summary = run_pipeline(frames, detector, classifier, cfg, sink_fn, device_id=device)
    finally:
        if client:
            client.close()
    if summary.events_undelivered or summary.events_dropped:
        click.echo(
            f"undelivered={summary.events_undelivered} dropped={summary.events_dropped}",
            err=True,
        )
    click.echo(f"frames={summary.frames} detections={summary.detections} events={summary.events}")


# ----------------------------------------------------------------- server


@cli.group("server")
def server_group() -> None:
    """Run the cloud alert service."""


@server_group.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--storage-root", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--webhook", "webhooks", multiple=True, help="Notification URL (repeatable).")
@click.option("--classifier-threshold", type=float, default=None)
@click.option("--token", default=None, help="Require this bearer token on the API.")
def server_run(
    config_path: Path | None,
    host: str | None,
    port: int | None,
    storage_root: Path | None,
    webhooks: tuple[str, ...],
    classifier_threshold: float | None,
    token: str | None,
) -> None:
    """Serve the HTTP API until interrupted."""
    import uvicorn

    base = ServerConfig.from_file(config_path) if config_path else ServerConfig()
    overrides = {
        key: value
        for key, value in (
            ("host", host),
            ("port", port),
            ("storage_root", storage_root),
            ("webhook_urls", webhooks or None),
            ("classifier_threshold", classifier_threshold),
            ("bearer_token", token),
        )
        if value is not None
    }
    config = ServerConfig(**{**base.__dict__, **overrides})
    app = build_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


# ------------------------------------------------------------------- eval


@cli.group("eval")
def eval_group() -> None:
    """Detection/classification metrics, ROC, throughput."""


@eval_group.command("detect")
@click.option("--pred", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Predictions: image<TAB>score<TAB>xmin,ymin,xmax,ymax per line.")
@click.option("--gt", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True,
              help="Dataset root; ground truth keyed by image relpath.")
@click.option("--iou", type=float, default=0.3, show_default=True)
@click.option("--name", default="detections", show_default=True, help="Row label in the table.")
@click.option("--kv", is_flag=True)
def eval_detect(pred: Path, gt: Path, iou: float, name: str, kv: bool) -> None:
    """Greedy IoU matching -> Acc/Rec/Pre table."""
    ground_truth, skipped = ev.ground_truth_from_index(ds.scan_dataset(gt))
    if skipped:
        click.echo(f"skipped {skipped} degenerate ground-truth box(es)", err=True)
    counts = ev.match_detections(ev.read_predictions(pred), ground_truth, iou)
    metrics = ev.detection_metrics(counts)
    out = reports.detection_kv(counts, metrics) if kv else reports.detection_table([(name, metrics)])
    click.echo(out, nl=False)


def _read_scored_labels(path: Path) -> tuple[list[float], list[bool]]:
    """Read `score<TAB>label` lines; label is 1/0 or gun/other."""
    scores: list[float] = []
    labels: list[bool] = []
    truthy = {"1": True, "gun": True, "0": False, "other": False}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in truthy:
            raise ev.EvalError(f"{path}:{line_no}: expected score<TAB>label(1|0|gun|other)")
        try:
            score = float(parts[0])
        except ValueError:
            raise ev.EvalError(f"{path}:{line_no}: score {parts[0]!r} is not a number") from None
        scores.append(score)
        labels.append(truthy[parts[1]])
    if not scores:
        raise ev.EvalError(f"{path}: no scored labels")
    return scores, labels


@eval_group.command("classify")
@click.option("--scores", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Lines of score<TAB>label (1|0 or gun|other).")
@click.option("--thr", type=float, default=0.5, show_default=True)
@click.option("--name", default="classifier", show_default=True)
@click.option("--kv", is_flag=True)
def eval_classify(scores: Path, thr: float, name: str, kv: bool) -> None:
    """Binary confusion at a score threshold -> Acc/Rec/Pre table."""
    values, labels = _read_scored_labels(scores)
    counts, metrics = ev.classifier_metrics(values, labels, thr)
    out = reports.classifier_kv(counts, metrics) if kv else reports.classifier_table([(name, metrics)])
    click.echo(out, nl=False)


@eval_group.command("roc")
@click.option("--scores", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--plot", type=click.Path(dir_okay=False, path_type=Path), default=None)
def eval_roc(scores: Path, csv_out: Path | None, plot: Path | None) -> None:
    """ROC sweep and AUC; optionally write the CSV and an SVG plot."""
    values, labels = _read_scored_labels(scores)
    curve = ev.roc(values, labels)
    click.echo(f"auc\t{curve.auc!r}")
    click.echo(f"points\t{len(curve.points)}")
    if csv_out is not None:
        csv_out.write_text(reports.roc_csv(curve))
        click.echo(f"csv written to {csv_out}", err=True)
    if plot is not None:
        reports.plot_roc(curve, plot)
        click.echo(f"plot written to {plot}", err=True)


@eval_group.command("bench")
@click.option("--frames", "n_frames", type=int, default=300, show_default=True)
@click.option("--width", type=int, default=640, show_default=True)
@click.option("--height", type=int, default=360, show_default=True)
@click.option("--moving/--static", default=True, show_default=True)
@click.option("--warmup", type=int, default=10, show_default=True)
@_pipeline_options
def eval_bench(n_frames: int, width: int, height: int, moving: bool, warmup: int, **cfg_flags) -> None:
    """Throughput of the pipeline loop on synthetic frames (NullBackend).

    Output values are measurements and vary run to run by nature.
    """
    cfg = _config_from_flags(**cfg_flags)
    if moving:
        spec = SceneSpec(frames=n_frames, width=width, height=height)
    else:
        spec = static_scene(n_frames, width=width, height=height)
    report = ev.fps_bench(spec.stream(), NullBackend(), ConstantClassifier(0.0), cfg, warmup=warmup)
    click.echo(reports.bench_kv(report), nl=False)


# ------------------------------------------------------------------ proto


@cli.group("proto")
def proto_group() -> None:
    """Encode/decode the edge->cloud report envelope."""


@proto_group.command("encode")
@click.option("--device", required=True)
@click.option("--timestamp-ms", type=int, required=True)
@click.option("--track-id", type=int, required=True)
@click.option("--box", required=True, help="xmin,ymin,xmax,ymax")
@click.option("--score", type=float, required=True)
@click.option("--chip", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--snapshot", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Output file; stdout when omitted.")
def proto_encode(
    device: str, timestamp_ms: int, track_id: int, box: str, score: float,
    chip: Path, snapshot: Path, out: Path | None,
) -> None:
    """Build the canonical envelope from files and metadata."""
    coords = tuple(int(c) for c in box.split(","))
    if len(coords) != 4:
        raise click.UsageError("--box needs 4 comma-separated integers")
    chip_bytes = chip.read_bytes()
    snap_bytes = snapshot.read_bytes()
    for label, payload in (("chip", chip_bytes), ("snapshot", snap_bytes)):
        if not looks_like_jpeg(payload):
            raise GdsError(f"{label} file is not a JPEG")
    report = DetectionReport(
        device_id=device,
        timestamp_ms=timestamp_ms,
        track_id=track_id,
        box=BoundingBox.from_tuple(coords),
        detector_score=score,
        chip_jpeg=chip_bytes,
        snapshot_jpeg=snap_bytes,
    )
    data = encode_report(report)
    if out is None:
        sys.stdout.buffer.write(data)
    else:
        out.write_bytes(data)
        click.echo(f"{len(data)} bytes written to {out}", err=True)


@proto_group.command("decode")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
def proto_decode(in_path: Path) -> None:
    """Validate an envelope and print its fields (payloads as digests)."""
    report = decode_report(in_path.read_bytes())
    box = report.box
    click.echo(f"protocol_version\t{report.protocol_version}")
    click.echo(f"device_id\t{report.device_id}")
    click.echo(f"timestamp_ms\t{report.timestamp_ms}")
    click.echo(f"track_id\t{report.track_id}")
    click.echo(f"box\t{box.x_min},{box.y_min},{box.x_max},{box.y_max}")
    click.echo(f"detector_score\t{report.detector_score!r}")
    click.echo(f"chip_bytes\t{len(report.chip_jpeg)}")
    click.echo(f"chip_sha256\t{hashlib.sha256(report.chip_jpeg).hexdigest()}")
    click.echo(f"snapshot_bytes\t{len(report.snapshot_jpeg)}")
    click.echo(f"snapshot_sha256\t{hashlib.sha256(report.snapshot_jpeg).hexdigest()}")
