"""Images, annotators, boxes and annotation sets.

Boxes are integer pixel rectangles with half-open extent: ``Box(x, y, w, h)``
covers columns ``[x, x + w)`` and rows ``[y, y + h)``, so ``w * h`` is the
pixel count. Out-of-bounds boxes are clamped to the image on ingestion and a
warning is kept in ``AnnotationSet.notes``.

Detector predictions use the same ``LabeledBox`` type with a ``score`` and an
annotator whose tier is ``"model"``.

Participation: an annotator has processed an image when it drew at least one
box there or when the pair is listed in ``assignments``. The distinction
matters for agreement: a processed image with no boxes is all-unlabeled, an
unprocessed one is missing data.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

from .errors import ConfigError, ParseError, RecordError, ReferentialError, VocabularyError

TIERS = ("professional", "expert", "experienced", "novice", "model")
CSV_COLUMNS = ("image_id", "annotator_id", "label", "x", "y", "w", "h", "score")
FORMATS = ("canonical-json", "csv")


@dataclass(frozen=True)
class ImageRef:
    id: str
    width: int
    height: int
    source: str | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image {self.id!r}: dimensions must be positive")


@dataclass(frozen=True)
class Annotator:
    id: str
    tier: str = "professional"

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"annotator {self.id!r}: unknown tier {self.tier!r}")


@dataclass(frozen=True, order=True)
class Box:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.w < 1 or self.h < 1:
            raise ValueError(f"invalid box {self.as_list()}")

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


def clamp_extent(x: int, y: int, w: int, h: int, width: int, height: int) -> tuple[int, int, int, int]:
    """Clip a raw ``[x, y, w, h]`` rectangle to ``width`` x ``height``.

    The result may have zero or negative extent; callers decide whether that is
    an error.
    """
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, width), min(y + h, height)
    return x0, y0, x1 - x0, y1 - y0


@dataclass(frozen=True)
class LabeledBox:
    image_id: str
    annotator_id: str
    label: str
    box: Box
    score: float | None = None

    def __post_init__(self):
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class LabelMap:
    """Label renames and drops, applied before vocabulary validation."""

    rename: Mapping[str, str] = field(default_factory=dict)
    drop: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "rename", dict(self.rename))
        object.__setattr__(self, "drop", frozenset(self.drop))
        overlap = set(self.rename) & self.drop
        if overlap:
            raise ConfigError(f"labels both renamed and dropped: {sorted(overlap)}")
        dropped_targets = set(self.rename.values()) & self.drop
        if dropped_targets:
            raise ConfigError(f"rename targets are dropped: {sorted(dropped_targets)}")

    @classmethod
    def from_json(cls, payload: str | bytes | Mapping[str, Any]) -> "LabelMap":
        if isinstance(payload, Mapping):
            doc = payload
        else:
            try:
                doc = json.loads(payload)
            except json.JSONDecodeError as exc:
                raise ParseError(f"label map: {exc.msg}", f"line {exc.lineno}") from exc
        if not isinstance(doc, dict):
            raise ParseError("label map must be a JSON object")
        rename = doc.get("rename", {})
        drop = doc.get("drop", [])
        if not isinstance(rename, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in rename.items()
        ):
            raise ParseError("label map 'rename' must map strings to strings")
        if not isinstance(drop, list) or not all(isinstance(d, str) for d in drop):
            raise ParseError("label map 'drop' must be a list of strings")
        return cls(rename=rename, drop=frozenset(drop))

    def to_dict(self) -> dict:
        return {"rename": dict(sorted(self.rename.items())), "drop": sorted(self.drop)}

    @property
    def is_empty(self) -> bool:
        return not self.rename and not self.drop

    def map_label(self, label: str) -> str | None:
        if label in self.drop:
            return None
        return self.rename.get(label, label)

    def map_vocabulary(self, labels: Iterable[str]) -> tuple[str, ...]:
        out: list[str] = []
        for label in labels:
            mapped = self.map_label(label)
            if mapped is not None and mapped not in out:
                out.append(mapped)
        return tuple(out)


@dataclass(frozen=True)
class AnnotationSet:
    """Images, annotators, a label vocabulary and the boxes that link them.

    ``notes`` carries ingestion warnings and mapping counts; it does not take
    part in equality.
    """

    images: tuple[ImageRef, ...]
    annotators: tuple[Annotator, ...]
    labels: tuple[str, ...]
    boxes: tuple[LabeledBox, ...]
    assignments: frozenset[tuple[str, str]] = frozenset()
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("images", "annotators", "labels", "boxes", "notes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "assignments", frozenset(self.assignments))
        if not self.labels:
            raise VocabularyError("label vocabulary is empty")
        if len(set(self.labels)) != len(self.labels):
            raise VocabularyError(f"duplicate labels in vocabulary: {list(self.labels)}")
        image_ids = [im.id for im in self.images]
        if len(set(image_ids)) != len(image_ids):
            dup = sorted(k for k, v in Counter(image_ids).items() if v > 1)
            raise ReferentialError(f"duplicate image ids: {dup}")
        ann_ids = [a.id for a in self.annotators]
        if len(set(ann_ids)) != len(ann_ids):
            dup = sorted(k for k, v in Counter(ann_ids).items() if v > 1)
            raise ReferentialError(f"duplicate annotator ids: {dup}")
        images, anns, vocab = set(image_ids), set(ann_ids), set(self.labels)
        for b in self.boxes:
            if b.image_id not in images:
                raise ReferentialError(f"box references unknown image {b.image_id!r}")
            if b.annotator_id not in anns:
                raise ReferentialError(f"box references unknown annotator {b.annotator_id!r}")
            if b.label not in vocab:
                raise VocabularyError(f"label {b.label!r} not in vocabulary {list(self.labels)}")
        for image_id, annotator_id in self.assignments:
            if image_id not in images or annotator_id not in anns:
                raise ReferentialError(f"assignment ({image_id!r}, {annotator_id!r}) does not resolve")

    @cached_property
    def _image_index(self) -> dict[str, ImageRef]:
        return {im.id: im for im in self.images}

    @cached_property
    def _grouped(self) -> dict[tuple[str, str], list[LabeledBox]]:
        groups: dict[tuple[str, str], list[LabeledBox]] = defaultdict(list)
        for b in self.boxes:
            groups[(b.image_id, b.annotator_id)].append(b)
        return dict(groups)

    @cached_property
    def _participants(self) -> dict[str, frozenset[str]]:
        parts: dict[str, set[str]] = {im.id: set() for im in self.images}
        for image_id, annotator_id in self._grouped:
            parts[image_id].add(annotator_id)
        for image_id, annotator_id in self.assignments:
            parts[image_id].add(annotator_id)
        return {k: frozenset(v) for k, v in parts.items()}

    @property
    def annotator_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.annotators)

    def image(self, image_id: str) -> ImageRef:
        try:
            return self._image_index[image_id]
        except KeyError:
            raise ReferentialError(f"unknown image {image_id!r}") from None

    def boxes_for(self, image_id: str, annotator_id: str | None = None) -> list[LabeledBox]:
        if annotator_id is not None:
            return list(self._grouped.get((image_id, annotator_id), ()))
        return [b for b in self.boxes if b.image_id == image_id]

    def participants(self, image_id: str) -> frozenset[str]:
        """Annotators that processed ``image_id``."""
        return self._participants.get(image_id, frozenset())

    def participated(self, image_id: str, annotator_id: str) -> bool:
        return annotator_id in self.participants(image_id)

    def replace(self, **changes) -> "AnnotationSet":
        return replace(self, **changes)


def merge_sets(sets: Sequence[AnnotationSet]) -> AnnotationSet:
    """Union of annotation sets sharing images and vocabulary (e.g. simulated annotators)."""
    if not sets:
        raise ConfigError("nothing to merge")
    first = sets[0]
    annotators: list[Annotator] = []
    seen: set[str] = set()
    boxes: list[LabeledBox] = []
    assignments: set[tuple[str, str]] = set()
    notes: list[str] = []
    for s in sets:
        if s.labels != first.labels:
            raise VocabularyError("cannot merge sets with different vocabularies")
        if s.images != first.images:
            raise ReferentialError("cannot merge sets over different images")
        for a in s.annotators:
            if a.id not in seen:
                seen.add(a.id)
                annotators.append(a)
        boxes.extend(s.boxes)
        assignments |= s.assignments
        notes.extend(s.notes)
    return AnnotationSet(first.images, tuple(annotators), first.labels, tuple(boxes), frozenset(assignments), tuple(notes))


# -- parsing ------------------------------------------------------------------


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected integer, got {value!r}", where)
    if isinstance(value, float):
        if not value.is_integer():
            raise ParseError(f"expected integer pixel coordinate, got {value!r}", where)
        value = int(value)
    return value


def _as_score(value: Any, where: str) -> float | None:
    if value is None or value == "":
        return None
    try:
        score = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"score is not a number: {value!r}", where) from None
    if not 0.0 <= score <= 1.0:
        raise ParseError(f"score {score} outside [0, 1]", where)
    return score


class _Builder:
    """Collects raw box records, maps labels, clamps, and reports all bad records at once."""

    def __init__(self, images, annotators, labels, label_map: LabelMap | None):
        self.images = {im.id: im for im in images}
        self.image_list = list(images)
        self.annotators = {a.id: a for a in annotators}
        self.annotator_list = list(annotators)
        self.label_map = label_map or LabelMap()
        self.labels = self.label_map.map_vocabulary(labels)
        self.vocab = set(self.labels)
        self.boxes: list[LabeledBox] = []
        self.notes: list[str] = []
        self.bad_records: list[str] = []
        self.renamed: Counter = Counter()
        self.dropped: Counter = Counter()

    def add(self, where, image_id, annotator_id, label, x, y, w, h, score):
        if image_id not in self.images:
            raise ReferentialError(f"{where}: unknown image_id {image_id!r}")
        if annotator_id not in self.annotators:
            raise ReferentialError(f"{where}: unknown annotator_id {annotator_id!r}")
        mapped = self.label_map.map_label(label)
        if mapped is None:
            self.dropped[label] += 1
            return
        if mapped != label:
            self.renamed[(label, mapped)] += 1
        if mapped not in self.vocab:
            raise VocabularyError(f"{where}: label {label!r} not in vocabulary {list(self.labels)}")
        im = self.images[image_id]
        cx, cy, cw, ch = clamp_extent(x, y, w, h, im.width, im.height)
        if cw < 1 or ch < 1:
            self.bad_records.append(f"{where}: box {[x, y, w, h]} has zero area on {im.width}x{im.height} image {image_id!r}")
            return
        if (cx, cy, cw, ch) != (x, y, w, h):
            self.notes.append(f"{where}: box {[x, y, w, h]} clamped to {[cx, cy, cw, ch]}")
        self.boxes.append(LabeledBox(image_id, annotator_id, mapped, Box(cx, cy, cw, ch), score))

    def build(self, assignments=()) -> AnnotationSet:
        if self.bad_records:
            raise RecordError(
                f"{len(self.bad_records)} record(s) have zero area after clamping: " + "; ".join(self.bad_records),
                self.bad_records,
            )
        notes = list(self.notes) + _mapping_notes(self.renamed, self.dropped)
        return AnnotationSet(
            tuple(self.image_list),
            tuple(self.annotator_list),
            self.labels,
            tuple(self.boxes),
            frozenset(assignments),
            tuple(notes),
        )


def _mapping_notes(renamed: Counter, dropped: Counter) -> list[str]:
    notes = [f"renamed {n} box(es) {src!r} -> {dst!r}" for (src, dst), n in sorted(renamed.items())]
    notes += [f"dropped {n} box(es) labeled {lab!r}" for lab, n in sorted(dropped.items())]
    return notes


def _decode(payload: bytes | str) -> str:
    if isinstance(payload, bytes):
        try:
            return payload.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"payload is not UTF-8: {exc.reason}", f"byte {exc.start}") from exc
    return payload


def _expect(cond: bool, message: str, where: str):
    if not cond:
        raise ParseError(message, where)


def _parse_header(doc: Mapping[str, Any]) -> tuple[list[ImageRef], list[Annotator], list[str]]:
    images_raw = doc.get("images")
    _expect(isinstance(images_raw, list), "'images' must be an array", "images")
    images = []
    for i, rec in enumerate(images_raw):
        where = f"images[{i}]"
        _expect(isinstance(rec, dict), "image record must be an object", where)
        _expect(isinstance(rec.get("id"), str), "image 'id' must be a string", where)
        width = _as_int(rec.get("width"), where + ".width")
        height = _as_int(rec.get("height"), where + ".height")
        _expect(width >= 1 and height >= 1, "image dimensions must be positive", where)
        source = rec.get("source")
        _expect(source is None or isinstance(source, str), "'source' must be a string", where)
        images.append(ImageRef(rec["id"], width, height, source))

    annotators_raw = doc.get("annotators", [])
    _expect(isinstance(annotators_raw, list), "'annotators' must be an array", "annotators")
    annotators = []
    for i, rec in enumerate(annotators_raw):
        where = f"annotators[{i}]"
        _expect(isinstance(rec, dict) and isinstance(rec.get("id"), str), "annotator needs a string 'id'", where)
        tier = rec.get("tier", "professional")
        _expect(tier in TIERS, f"unknown tier {tier!r}", where)
        annotators.append(Annotator(rec["id"], tier))

    labels = doc.get("labels")
    _expect(isinstance(labels, list) and all(isinstance(x, str) for x in labels), "'labels' must be an array of strings", "labels")
    _expect(len(labels) > 0, "'labels' must not be empty", "labels")
    _expect(len(set(labels)) == len(labels), "'labels' contains duplicates", "labels")

    for kind, ids in (("image", [im.id for im in images]), ("annotator", [a.id for a in annotators])):
        dup = sorted(k for k, v in Counter(ids).items() if v > 1)
        if dup:
            raise ReferentialError(f"duplicate {kind} ids: {dup}")
    return images, annotators, labels


def _parse_json(text: str, label_map: LabelMap | None) -> AnnotationSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    _expect(isinstance(doc, dict), "top level must be an object", "$")
    images, annotators, labels = _parse_header(doc)
    builder = _Builder(images, annotators, labels, label_map)
    boxes_raw = doc.get("boxes", [])
    _expect(isinstance(boxes_raw, list), "'boxes' must be an array", "boxes")
    for i, rec in enumerate(boxes_raw):
        where = f"boxes[{i}]"
        _expect(isinstance(rec, dict), "box record must be an object", where)
        for key in ("image_id", "annotator_id", "label"):
            _expect(isinstance(rec.get(key), str), f"'{key}' must be a string", where)
        bbox = rec.get("bbox")
        _expect(isinstance(bbox, list) and len(bbox) == 4, "'bbox' must be [x, y, w, h]", where)
        x, y, w, h = (_as_int(v, f"{where}.bbox[{j}]") for j, v in enumerate(bbox))
        score = _as_score(rec.get("score"), where + ".score")
        builder.add(where, rec["image_id"], rec["annotator_id"], rec["label"], x, y, w, h, score)

    assignments = []
    raw = doc.get("assignments", [])
    _expect(isinstance(raw, list), "'assignments' must be an array", "assignments")
    for i, rec in enumerate(raw):
        where = f"assignments[{i}]"
        _expect(
            isinstance(rec, dict) and isinstance(rec.get("image_id"), str) and isinstance(rec.get("annotator_id"), str),
            "assignment needs string 'image_id' and 'annotator_id'",
            where,
        )
        if rec["image_id"] not in builder.images or rec["annotator_id"] not in builder.annotators:
            raise ReferentialError(f"{where}: assignment does not resolve")
        assignments.append((rec["image_id"], rec["annotator_id"]))
    return builder.build(assignments)


def _parse_csv(text: str, label_map: LabelMap | None, header: AnnotationSet | Mapping | None) -> AnnotationSet:
    if header is None:
        raise ConfigError("CSV import needs a header document with images and labels")
    if isinstance(header, AnnotationSet):
        images, annotators, labels = list(header.images), list(header.annotators), list(header.labels)
    else:
        images, annotators, labels = _parse_header(header)
    known = {a.id for a in annotators}
    reader = csv.reader(io.StringIO(text))
    try:
        columns = next(reader)
    except StopIteration:
        raise ParseError("empty CSV payload", "line 1") from None
    columns = [c.strip() for c in columns]
    missing = [c for c in CSV_COLUMNS if c not in columns and c != "score"]
    if missing:
        raise ParseError(f"missing CSV columns {missing}", "line 1")
    col = {name: columns.index(name) for name in CSV_COLUMNS if name in columns}

    rows = []
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise ParseError(f"expected {len(columns)} fields, got {len(row)}", f"line {line}")
        rec = {name: row[i].strip() for name, i in col.items()}
        coords = []
        for key in ("x", "y", "w", "h"):
            try:
                coords.append(int(rec[key]))
            except ValueError:
                raise ParseError(f"column {key!r} is not an integer: {rec[key]!r}", f"line {line}") from None
        score = _as_score(rec.get("score"), f"line {line}")
        rows.append((line, rec, coords, score))
        if rec["annotator_id"] not in known:
            known.add(rec["annotator_id"])
            annotators.append(Annotator(rec["annotator_id"], "model" if score is not None else "professional"))

    builder = _Builder(images, annotators, labels, label_map)
    for line, rec, (x, y, w, h), score in rows:
        builder.add(f"line {line}", rec["image_id"], rec["annotator_id"], rec["label"], x, y, w, h, score)
    assignments = header.assignments if isinstance(header, AnnotationSet) else ()
    return builder.build(assignments)


def parse_annotation_set(
    payload: bytes | str,
    format: str = "canonical-json",
    *,
    label_map: LabelMap | None = None,
    header: AnnotationSet | Mapping | None = None,
) -> AnnotationSet:
    """Decode an annotation payload into a linked, clamped ``AnnotationSet``.

    ``label_map`` is applied to each box label (and to the declared
    vocabulary) before labels are checked. CSV rows carry no image sizes or
    vocabulary, so CSV input needs ``header``: either an ``AnnotationSet`` or a
    canonical-JSON style mapping with ``images`` and ``labels``. Annotators
    seen only in the CSV get tier ``"model"`` when their first row has a score.
    """
    text = _decode(payload)
    if format == "canonical-json":
        return _parse_json(text, label_map)
    if format == "csv":
        return _parse_csv(text, label_map, header)
    raise ConfigError(f"unknown annotation format {format!r}; expected one of {FORMATS}")


def annotation_set_to_dict(s: AnnotationSet) -> dict:
    doc: dict[str, Any] = {
        "images": [
            {"id": im.id, "width": im.width, "height": im.height, **({"source": im.source} if im.source is not None else {})}
            for im in s.images
        ],
        "annotators": [{"id": a.id, "tier": a.tier} for a in s.annotators],
        "labels": list(s.labels),
        "boxes": [
            {
                "image_id": b.image_id,
                "annotator_id": b.annotator_id,
                "label": b.label,
                "bbox": b.box.as_list(),
                **({"score": b.score} if b.score is not None else {}),
            }
            for b in s.boxes
        ],
    }
    if s.assignments:
        doc["assignments"] = [{"image_id": i, "annotator_id": a} for i, a in sorted(s.assignments)]
    return doc


def serialize_annotation_set(s: AnnotationSet, format: str = "canonical-json") -> str:
    if format == "canonical-json":
        return json.dumps(annotation_set_to_dict(s), indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for b in s.boxes:
            writer.writerow([b.image_id, b.annotator_id, b.label, *b.box.as_list(), "" if b.score is None else repr(b.score)])
        return buf.getvalue()
    raise ConfigError(f"unknown annotation format {format!r}")


CANONICAL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Annotation set",
    "type": "object",
    "required": ["images", "annotators", "labels", "boxes"],
    "properties": {
        "images": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "width", "height"],
                "properties": {
                    "id": {"type": "string"},
                    "width": {"type": "integer", "minimum": 1},
                    "height": {"type": "integer", "minimum": 1},
                    "source": {"type": "string"},
                },
            },
        },
        "annotators": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "tier"],
                "properties": {"id": {"type": "string"}, "tier": {"enum": list(TIERS)}},
            },
        },
        "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["image_id", "annotator_id", "label", "bbox"],
                "properties": {
                    "image_id": {"type": "string"},
                    "annotator_id": {"type": "string"},
                    "label": {"type": "string"},
                    "bbox": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
                    "score": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "assignments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["image_id", "annotator_id"],
                "properties": {"image_id": {"type": "string"}, "annotator_id": {"type": "string"}},
            },
        },
    },
}


# -- label mapping and validation --------------------------------------------


def apply_label_mapping(s: AnnotationSet, label_map: LabelMap, vocabulary: Sequence[str] | None = None) -> AnnotationSet:
    """Rename and drop box labels.

    The resulting vocabulary is ``vocabulary`` when given, otherwise the mapped
    image of ``s.labels``. Every rename target must be in it.
    """
    final = tuple(vocabulary) if vocabulary is not None else label_map.map_vocabulary(s.labels)
    absent = sorted({t for t in label_map.rename.values() if t not in final})
    if absent:
        raise ConfigError(f"rename targets {absent} are not in the vocabulary {list(final)}")
    if label_map.is_empty and vocabulary is None:
        return s
    renamed: Counter = Counter()
    dropped: Counter = Counter()
    boxes = []
    for b in s.boxes:
        mapped = label_map.map_label(b.label)
        if mapped is None:
            dropped[b.label] += 1
            continue
        if mapped != b.label:
            renamed[(b.label, mapped)] += 1
            b = replace(b, label=mapped)
        boxes.append(b)
    return replace(s, labels=final, boxes=tuple(boxes), notes=s.notes + tuple(_mapping_notes(renamed, dropped)))


@dataclass
class ValidationReport:
    coverage: dict[str, float]
    image_annotators: dict[str, list[str]]
    duplicates: list[dict]
    class_counts: dict[str, int]
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "image_annotators": self.image_annotators,
            "duplicates": self.duplicates,
            "class_counts": self.class_counts,
            "warnings": self.warnings,
        }


def validate(s: AnnotationSet) -> ValidationReport:
    """Coverage, duplicate boxes and per-class counts. Never raises."""
    n_images = len(s.images)
    coverage = {}
    for a in s.annotators:
        covered = sum(1 for im in s.images if s.participated(im.id, a.id))
        coverage[a.id] = covered / n_images if n_images else 0.0
    image_annotators = {im.id: sorted(s.participants(im.id)) for im in s.images}
    counts = Counter((b.image_id, b.annotator_id, b.label, b.box) for b in s.boxes)
    duplicates = [
        {"image_id": i, "annotator_id": a, "label": lab, "bbox": box.as_list(), "count": n}
        for (i, a, lab, box), n in counts.items()
        if n > 1
    ]
    class_counts = {label: 0 for label in s.labels}
    for b in s.boxes:
        class_counts[b.label] += 1
    return ValidationReport(coverage, image_annotators, duplicates, class_counts, list(s.notes))
