"""Dataset tooling: annotation parsing, tree scanning, validation, stats, chips, splits.

Normative layout (documented in the README): the dataset root holds a
"detector" and a "classifier" subtree; any folder named "gun" contains gun
images and any folder named "other" contains non-gun images; detector gun
folders keep images under JpegImages/ with one XML file per image under
Annotations/, paired by basename; optional "train"/"test" path components
record split membership.

Annotation schema (XML):

    annotation
      filename
      size { width, height, depth }
      object* { name, bndbox { xmin, ymin, xmax, ymax } }

Scanning and validation report findings instead of aborting: scraped trees
contain dirt and the tooling has to survive it.  Record boxes are therefore
kept as raw integer tuples; geometry is checked by parse_annotation in
strict mode and by validate().
"""

from __future__ import annotations

import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .core import BoundingBox, GdsError, GeometryError, crop_and_resize
from .jpeg import ImageIoError, read_image, write_jpeg

IMAGE_SUFFIXES = {".jpg", ".jpeg"}
CATEGORIES = ("detector/gun", "detector/other", "classifier/gun", "classifier/other")


class DatasetError(GdsError):
    """Dataset tree level failure (missing root, unwritable output, ...)."""


class AnnotationParseError(GdsError):
    """The XML document is not well formed."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class AnnotationSchemaError(GdsError):
    """A required element is missing from the annotation document."""

    def __init__(self, element: str):
        super().__init__(f"missing required element: {element}")
        self.element = element


class AnnotationGeometryError(GdsError):
    """An annotated box violates the box invariants."""

    def __init__(self, filename: str, detail: str):
        super().__init__(f"{filename}: {detail}")
        self.filename = filename


@dataclass(frozen=True)
class AnnotationRecord:
    """Parsed ground truth for one image.

    objects holds (class name, (xmin, ymin, xmax, ymax)) tuples exactly as
    written in the file; degenerate boxes are representable so that
    validation can report them.
    """

    filename: str
    width: int
    height: int
    depth: int
    objects: tuple[tuple[str, tuple[int, int, int, int]], ...]


@dataclass(frozen=True)
class Finding:
    """One validation observation about a dataset tree."""

    kind: str
    path: str
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.kind}: {self.path}"
        return f"{text} ({self.detail})" if self.detail else text


@dataclass(frozen=True)
class ImageEntry:
    """One indexed image with its category and optional annotation."""

    relpath: str
    model: str
    label: str
    split: str = ""
    annotation: AnnotationRecord | None = None
    annotation_relpath: str | None = None

    @property
    def category(self) -> str:
        return f"{self.model}/{self.label}"


@dataclass(frozen=True)
class DatasetIndex:
    """Immutable view of a scanned dataset tree."""

    root: Path
    entries: tuple[ImageEntry, ...]
    findings: tuple[Finding, ...] = ()

    @property
    def counts(self) -> dict[str, int]:
        counts = {category: 0 for category in CATEGORIES}
        for entry in self.entries:
            counts[entry.category] = counts.get(entry.category, 0) + 1
        return counts

    def annotated(self, split: str | None = None) -> list[ImageEntry]:
        """Detector gun entries that carry an annotation record."""
        return [
            entry
            for entry in self.entries
            if entry.category == "detector/gun"
            and entry.annotation is not None
            and (split is None or entry.split == split)
        ]


def _int_text(element: ET.Element, name: str) -> int:
    child = element.find(name)
    if child is None or child.text is None:
        raise AnnotationSchemaError(name)
    text = child.text.strip()
    try:
        return int(text)
    except ValueError:
        try:
            return round(float(text))
        except ValueError:
            raise AnnotationSchemaError(name) from None


def _byte_offset(document: bytes, line: int, column: int) -> int:
    lines = document.split(b"\n")
    return sum(len(text) + 1 for text in lines[: line - 1]) + column


def _extract(document: bytes) -> AnnotationRecord:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        raise AnnotationParseError(str(exc), offset=_byte_offset(document, line, column)) from exc
    name_el = root.find("filename")
    if name_el is None or name_el.text is None:
        raise AnnotationSchemaError("filename")
    size = root.find("size")
    if size is None:
        raise AnnotationSchemaError("size")
    width = _int_text(size, "width")
    height = _int_text(size, "height")
    depth = _int_text(size, "depth") if size.find("depth") is not None else 3
    objects = []
    for obj in root.findall("object"):
        label_el = obj.find("name")
        if label_el is None or label_el.text is None:
            raise AnnotationSchemaError("name")
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise AnnotationSchemaError("bndbox")
        coords = tuple(_int_text(bndbox, tag) for tag in ("xmin", "ymin", "xmax", "ymax"))
        objects.append((label_el.text.strip(), coords))
    return AnnotationRecord(
        filename=name_el.text.strip(),
        width=width,
        height=height,
        depth=depth,
        objects=tuple(objects),
    )


def _box_problem(coords: tuple[int, int, int, int]) -> str | None:
    xmin, ymin, xmax, ymax = coords
    if xmin < 0 or ymin < 0:
        return f"negative coordinates {coords}"
    if xmin >= xmax or ymin >= ymax:
        return f"degenerate box {coords}"
    return None


def parse_annotation(document: bytes, strict: bool = True) -> AnnotationRecord:
    """Parse one annotation document.

    Raises AnnotationParseError (with byte offset) on malformed XML,
    AnnotationSchemaError naming any missing element, and, in strict mode,
    AnnotationGeometryError for boxes that violate the box invariants.
    """
    record = _extract(document)
    if strict:
        for _name, coords in record.objects:
            problem = _box_problem(coords)
            if problem:
                raise AnnotationGeometryError(record.filename, problem)
    return record


def serialize_annotation(record: AnnotationRecord) -> bytes:
    """Write a record back to the XML schema parse_annotation reads."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = record.filename
    size = ET.SubElement(root, "size")
    for tag, value in (("width", record.width), ("height", record.height), ("depth", record.depth)):
        ET.SubElement(size, tag).text = str(value)
    for name, (xmin, ymin, xmax, ymax) in record.objects:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = name
        bndbox = ET.SubElement(obj, "bndbox")
        for tag, value in (("xmin", xmin), ("ymin", ymin), ("xmax", xmax), ("ymax", ymax)):
            ET.SubElement(bndbox, tag).text = str(value)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8") + b"\n"


def _categorize(parts: tuple[str, ...]) -> tuple[str | None, str | None, str]:
    model = "detector" if "detector" in parts else "classifier" if "classifier" in parts else None
    label = "gun" if "gun" in parts else "other" if "other" in parts else None
    split = "train" if "train" in parts else "test" if "test" in parts else ""
    return model, label, split


def _annotation_path(image: Path) -> Path:
    if image.parent.name == "JpegImages":
        return image.parent.parent / "Annotations" / (image.stem + ".xml")
    return image.with_suffix(".xml")


def scan_dataset(root: Path | str) -> DatasetIndex:
    """Walk a dataset tree, pairing gun images with annotations by basename.

    Unpaired or unparseable files become findings, never aborts.  The walk
    is sorted, so the result does not depend on directory read order.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root not found: {root}")
    entries: list[ImageEntry] = []
    findings: list[Finding] = []
    images: list[Path] = sorted(
        path for path in root.rglob("*") if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
    )
    claimed_annotations: set[Path] = set()
    for image in images:
        rel = image.relative_to(root)
        model, label, split = _categorize(rel.parts[:-1])
        if model is None or label is None:
            continue
        annotation = None
        annotation_rel = None
        if model == "detector" and label == "gun":
            xml_path = _annotation_path(image)
            if xml_path.is_file():
                claimed_annotations.add(xml_path)
                annotation_rel = xml_path.relative_to(root).as_posix()
                try:
                    annotation = parse_annotation(xml_path.read_bytes(), strict=False)
                except (AnnotationParseError, AnnotationSchemaError) as exc:
                    findings.append(Finding("parse error", annotation_rel, str(exc)))
                    annotation = None
                except OSError as exc:
                    findings.append(Finding("unreadable annotation", annotation_rel, str(exc)))
                    annotation = None
            else:
                findings.append(Finding("orphan image", rel.as_posix(), "no matching annotation"))
        entries.append(
            ImageEntry(
                relpath=rel.as_posix(),
                model=model,
                label=label,
                split=split,
                annotation=annotation,
                annotation_relpath=annotation_rel,
            )
        )
    for xml_path in sorted(root.rglob("*.xml")):
        model, label, _split = _categorize(xml_path.relative_to(root).parts[:-1])
        if model == "detector" and label == "gun" and xml_path not in claimed_annotations:
            findings.append(
                Finding("orphan annotation", xml_path.relative_to(root).as_posix(), "no matching image")
            )
    return DatasetIndex(root=root, entries=tuple(entries), findings=tuple(findings))


def validate(index: DatasetIndex) -> list[Finding]:
    """Quality gate over an index: structural findings plus content checks.

    Checks annotated records for degenerate boxes, boxes outside the stated
    image size, filename mismatches and non-positive image dimensions.
    An empty list means the tree is clean.
    """
    findings = list(index.findings)
    for entry in index.entries:
        record = entry.annotation
        if record is None:
            continue
        path = entry.annotation_relpath or entry.relpath
        actual_name = Path(entry.relpath).name
        if record.filename and record.filename != actual_name:
            findings.append(
                Finding("filename mismatch", path, f"file says {record.filename!r}, stored as {actual_name!r}")
            )
        if record.width <= 0 or record.height <= 0:
            findings.append(
                Finding("bad image size", path, f"{record.width}x{record.height}")
            )
        for name, coords in record.objects:
            problem = _box_problem(coords)
            if problem:
                findings.append(Finding("degenerate box", path, f"{name}: {problem}"))
                continue
            xmin, ymin, xmax, ymax = coords
            if record.width > 0 and record.height > 0 and (xmax > record.width or ymax > record.height):
                findings.append(
                    Finding(
                        "box out of bounds",
                        path,
                        f"{name}: {coords} exceeds {record.width}x{record.height}",
                    )
                )
    return findings


@dataclass(frozen=True)
class BinSpec:
    """Histogram binning: log2-scaled area bins plus integer object bins."""

    area_bins: int = 24
    max_objects: int = 10


@dataclass(frozen=True)
class Histogram:
    labels: tuple[str, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def nonzero(self) -> list[tuple[str, int]]:
        return [(label, count) for label, count in zip(self.labels, self.counts) if count]


@dataclass(frozen=True)
class StatsReport:
    image_area: Histogram
    box_area: Histogram
    objects_per_image: Histogram


def _area_bin(area: int, bins: int) -> int:
    if area < 1:
        return 0
    return min(max(area.bit_length() - 1, 0), bins - 1)


def _area_labels(bins: int) -> tuple[str, ...]:
    labels = [f"[2^{i},2^{i + 1})" for i in range(bins - 1)]
    labels.append(f"[2^{bins - 1},inf)")
    return tuple(labels)


def compute_stats(index: DatasetIndex, bins: BinSpec = BinSpec(), split: str | None = None) -> StatsReport:
    """Histogram whole-image area, gun box area and gun objects per image."""
    records = [entry.annotation for entry in index.annotated(split=split)]
    image_counts = [0] * bins.area_bins
    box_counts = [0] * bins.area_bins
    object_counts = [0] * (bins.max_objects + 1)
    for record in records:
        image_counts[_area_bin(record.width * record.height, bins.area_bins)] += 1
        guns = 0
        for name, (xmin, ymin, xmax, ymax) in record.objects:
            if name != "gun":
                continue
            guns += 1
            box_counts[_area_bin((xmax - xmin) * (ymax - ymin), bins.area_bins)] += 1
        object_counts[min(guns, bins.max_objects)] += 1
    object_labels = tuple(str(i) for i in range(bins.max_objects)) + (f"{bins.max_objects}+",)
    return StatsReport(
        image_area=Histogram(_area_labels(bins.area_bins), tuple(image_counts)),
        box_area=Histogram(_area_labels(bins.area_bins), tuple(box_counts)),
        objects_per_image=Histogram(object_labels, tuple(object_counts)),
    )


@dataclass
class ChipExtraction:
    written: int = 0
    findings: list[Finding] = field(default_factory=list)


def _chip_name(relpath: str, box_index: int) -> str:
    stem = relpath.replace("/", "_")
    for suffix in IMAGE_SUFFIXES:
        if stem.lower().endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    return f"{stem}_{box_index:02d}.jpg"


def extract_chips(index: DatasetIndex, out: Path | str, size: int = 112) -> ChipExtraction:
    """Cut one chip per ground-truth box and write it as a size x size JPEG.

    Output names derive from the flattened source path plus the box index,
    so re-running produces byte-identical files.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    result = ChipExtraction()
    for entry in index.annotated():
        record = entry.annotation
        pixels = None
        for box_index, (_name, coords) in enumerate(record.objects):
            try:
                box = BoundingBox.from_tuple(coords)
            except GeometryError as exc:
                result.findings.append(Finding("degenerate box", entry.relpath, str(exc)))
                continue
            if pixels is None:
                try:
                    pixels = read_image(index.root / entry.relpath)
                except ImageIoError as exc:
                    result.findings.append(Finding("unreadable image", entry.relpath, str(exc)))
                    break
            try:
                chip = crop_and_resize(pixels, box, size)
            except GeometryError as exc:
                result.findings.append(Finding("box out of bounds", entry.relpath, str(exc)))
                continue
            write_jpeg(out / _chip_name(entry.relpath, box_index), chip)
            result.written += 1
    return result


@dataclass(frozen=True)
class SplitResult:
    train: tuple[ImageEntry, ...]
    test: tuple[ImageEntry, ...]


def split(index: DatasetIndex, test_fraction: float, seed: int) -> SplitResult:
    """Deterministic stratified train/test split.

    Every (model, label) category is shuffled with its own seed-derived RNG
    and cut at round(len * test_fraction), so per-category proportions match
    the requested fraction within one item.  Categories with a single item
    cannot be stratified and raise DatasetError.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups: dict[str, list[ImageEntry]] = {}
    for entry in index.entries:
        groups.setdefault(entry.category, []).append(entry)
    train: list[ImageEntry] = []
    test: list[ImageEntry] = []
    for category in sorted(groups):
        items = sorted(groups[category], key=lambda entry: entry.relpath)
        if len(items) < 2:
            raise DatasetError(f"cannot stratify: category {category} has {len(items)} item(s)")
        rng = random.Random(f"{seed}:{category}")
        rng.shuffle(items)
        n_test = int(len(items) * test_fraction + 0.5)
        test.extend(items[:n_test])
        train.extend(items[n_test:])
    train.sort(key=lambda entry: entry.relpath)
    test.sort(key=lambda entry: entry.relpath)
    return SplitResult(train=tuple(train), test=tuple(test))


def write_split_manifests(result: SplitResult, out_dir: Path | str) -> tuple[Path, Path]:
    """Write train.txt / test.txt manifests of newline-separated relpaths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.txt"
    test_path = out_dir / "test.txt"
    train_path.write_text("".join(entry.relpath + "\n" for entry in result.train))
    test_path.write_text("".join(entry.relpath + "\n" for entry in result.test))
    return train_path, test_path
