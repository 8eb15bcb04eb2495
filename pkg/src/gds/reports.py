"""Report rendering: aligned text tables, key-value lines, CSV, figures.

Table layouts mirror the published result tables: detection rows under
"Backbone / Acc % / Rec % / Pre %", classifier rows under "Model / Acc(%) /
Rec(%) / Pre(%)".  Percentages print with two decimals; undefined metrics
print as the word "undefined" and never masquerade as 0.00.

Key-value output is one `key<TAB>value` per line — the machine-readable
twin of every table, consumed by the test suite itself.  Figures (ROC
curve, dataset histograms) render through matplotlib to files next to the
delimited output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import StatsReport
from .evaluation import BenchReport, ConfusionCounts, Metrics, RocCurve


def fmt_pct(value: float | None) -> str:
    return "undefined" if value is None else f"{value * 100:.2f}"


def render_table(headers: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    """Plain aligned table: first column left-aligned, the rest right-aligned."""
    widths = [len(h) for h in headers]
    for row in rows:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(cell))

    def fmt_row(cells: tuple[str, ...]) -> str:
        out = [cells[0].ljust(widths[0])]
        out += [cell.rjust(widths[index + 1]) for index, cell in enumerate(cells[1:])]
        return "  ".join(out).rstrip()

    rule = "  ".join("-" * w for w in widths)
    lines = [fmt_row(headers), rule] + [fmt_row(row) for row in rows]
    return "\n".join(lines) + "\n"


def detection_table(rows: list[tuple[str, Metrics]]) -> str:
    return render_table(
        ("Backbone", "Acc %", "Rec %", "Pre %"),
        [(name, fmt_pct(m.accuracy), fmt_pct(m.recall), fmt_pct(m.precision)) for name, m in rows],
    )


def classifier_table(rows: list[tuple[str, Metrics]]) -> str:
    return render_table(
        ("Model", "Acc(%)", "Rec(%)", "Pre(%)"),
        [(name, fmt_pct(m.accuracy), fmt_pct(m.recall), fmt_pct(m.precision)) for name, m in rows],
    )


def _kv(pairs: list[tuple[str, object]]) -> str:
    return "".join(f"{key}\t{value}\n" for key, value in pairs)


def detection_kv(counts: ConfusionCounts, metrics: Metrics) -> str:
    return _kv(
        [
            ("tp", counts.tp),
            ("fp", counts.fp),
            ("fn", counts.fn),
            ("accuracy_pct", fmt_pct(metrics.accuracy)),
            ("recall_pct", fmt_pct(metrics.recall)),
            ("precision_pct", fmt_pct(metrics.precision)),
        ]
    )


def classifier_kv(counts: ConfusionCounts, metrics: Metrics) -> str:
    return _kv(
        [
            ("tp", counts.tp),
            ("fp", counts.fp),
            ("fn", counts.fn),
            ("tn", counts.tn),
            ("accuracy_pct", fmt_pct(metrics.accuracy)),
            ("recall_pct", fmt_pct(metrics.recall)),
            ("precision_pct", fmt_pct(metrics.precision)),
        ]
    )


def parse_kv(text: str) -> dict[str, str]:
    """Inverse of the key-value writers (self-consumption by tests/tools)."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        if not line:
            continue
        key, _, value = line.partition("\t")
        out[key] = value
    return out


def stats_table(report: StatsReport) -> str:
    sections = [
        ("image area (px^2)", report.image_area),
        ("gun box area (px^2)", report.box_area),
        ("gun objects per image", report.objects_per_image),
    ]
    blocks = []
    for title, hist in sections:
        rows = [(label, str(count)) for label, count in hist.nonzero()]
        if not rows:
            rows = [("(empty)", "0")]
        blocks.append(f"# {title}, total {hist.total}\n" + render_table(("bin", "count"), rows))
    return "\n".join(blocks)


def stats_kv(report: StatsReport) -> str:
    pairs: list[tuple[str, object]] = []
    for prefix, hist in (
        ("image_area", report.image_area),
        ("box_area", report.box_area),
        ("objects_per_image", report.objects_per_image),
    ):
        pairs.append((f"{prefix}/total", hist.total))
        pairs.extend((f"{prefix}/{label}", count) for label, count in zip(hist.labels, hist.counts))
    return _kv(pairs)


def roc_csv(curve: RocCurve) -> str:
    lines = ["threshold,fpr,tpr"]
    for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
        lines.append(f"{threshold!r},{fpr!r},{tpr!r}")
    return "\n".join(lines) + "\n"


def bench_kv(report: BenchReport) -> str:
    pairs: list[tuple[str, object]] = [
        ("frames", report.frames),
        ("measured_frames", report.measured_frames),
        ("wall_seconds", f"{report.wall_seconds:.4f}"),
        ("fps", f"{report.fps:.2f}"),
        ("detector_invocations", report.detector_invocations),
        ("detections", report.detections),
        ("events", report.events),
    ]
    pairs += [(f"stage_seconds/{k}", f"{v:.4f}") for k, v in sorted(report.stage_seconds.items())]
    return _kv(pairs)


def plot_roc(curve: RocCurve, out: Path | str) -> Path:
    """Render the ROC curve to an SVG (or whatever the suffix says)."""
    out = Path(out)
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [p[0] for p in curve.points]
    ys = [p[1] for p in curve.points]
    ax.plot(xs, ys, marker=".", linewidth=1.5)
    ax.plot([0, 1], [0, 1], linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title(f"ROC (AUC = {curve.auc:.4f})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.grid(True, linewidth=0.3)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return out


def plot_stats(report: StatsReport, out: Path | str) -> Path:
    """Three-panel histogram figure: image area, box area, objects per image."""
    out = Path(out)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    panels = [
        ("image area", report.image_area),
        ("gun box area", report.box_area),
        ("gun objects per image", report.objects_per_image),
    ]
    for ax, (title, hist) in zip(axes, panels):
        pairs = hist.nonzero() or [("0", 0)]
        labels = [p[0] for p in pairs]
        counts = [p[1] for p in pairs]
        ax.bar(range(len(counts)), counts)
        ax.set_xticks(range(len(counts)))
        ax.set_xticklabels(labels, rotation=60, fontsize=7, ha="right")
        ax.set_title(title)
        ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return out
