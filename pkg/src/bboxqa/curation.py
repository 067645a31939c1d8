"""Derived datasets: leave-annotator-out training sets and ground-truth selections.

Ground truth is selected, never merged: every image of a ``GroundTruthSet``
carries the boxes of exactly one source annotator, recorded in
``provenance``. Which annotators count as "top" is decided by the caller
(see ``quality.top_annotators``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

from .datamodel import (
    AnnotationSet,
    Annotator,
    LabelMap,
    annotation_set_to_dict,
    apply_label_mapping,
    parse_annotation_set,
)
from .errors import ConfigError, CoverageError, ParseError, ReferentialError
from .rng import Xoshiro256, derive_seed

RECIPES = ("drop_annotator", "mixed_top", "single_top", "original")
ORIGINAL = "original"


@dataclass(frozen=True)
class GroundTruthSet:
    base: AnnotationSet
    provenance: Mapping[str, str] = field(default_factory=dict)
    recipe: str = ORIGINAL
    seed: int | None = None

    def __post_init__(self):
        if self.recipe not in RECIPES:
            raise ConfigError(f"unknown recipe {self.recipe!r}")
        object.__setattr__(self, "provenance", dict(self.provenance))
        image_ids = {im.id for im in self.base.images}
        if set(self.provenance) != image_ids:
            raise ConfigError("provenance must name exactly one annotator for every image")
        for b in self.base.boxes:
            if self.provenance[b.image_id] != b.annotator_id:
                raise ConfigError(f"box on {b.image_id!r} from {b.annotator_id!r} contradicts provenance")

    def to_dict(self) -> dict:
        doc = annotation_set_to_dict(self.base)
        doc["provenance"] = {im.id: self.provenance[im.id] for im in self.base.images}
        doc["recipe"] = self.recipe
        doc["seed"] = self.seed
        return doc


def ground_truth_to_json(gt: GroundTruthSet) -> str:
    return json.dumps(gt.to_dict(), indent=2) + "\n"


def parse_ground_truth(payload: bytes | str) -> GroundTruthSet:
    """Read a serialized ``GroundTruthSet``; a plain annotation set with one annotator per image is accepted too."""
    text = payload.decode("utf-8-sig") if isinstance(payload, bytes) else payload
    base = parse_annotation_set(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:  # pragma: no cover - parse_annotation_set raised already
        raise ParseError(exc.msg) from exc
    if "provenance" in doc:
        provenance = doc["provenance"]
        if not isinstance(provenance, dict):
            raise ParseError("'provenance' must be an object", "provenance")
        return GroundTruthSet(base, provenance, doc.get("recipe", ORIGINAL), doc.get("seed"))
    provenance = {}
    for im in base.images:
        who = base.participants(im.id)
        if len(who) > 1:
            raise ConfigError(f"image {im.id!r} has boxes from several annotators; not a ground-truth set")
        provenance[im.id] = next(iter(who)) if who else ORIGINAL
    return GroundTruthSet(base, provenance, ORIGINAL, None)


def drop_annotator(s: AnnotationSet, k: str) -> AnnotationSet:
    """Everything except annotator ``k``; images stay even if nobody covers them now.

    Dropping an already dropped annotator is a no-op.
    """
    marker = f"dropped annotator {k!r}"
    if k not in s.annotator_ids:
        if marker in s.notes:
            return s
        raise ReferentialError(f"unknown annotator {k!r}")
    return s.replace(
        annotators=tuple(a for a in s.annotators if a.id != k),
        boxes=tuple(b for b in s.boxes if b.annotator_id != k),
        assignments=frozenset(p for p in s.assignments if p[1] != k),
        notes=s.notes + (marker,),
    )


def _resolve(s: AnnotationSet, top: Sequence[str], images: Sequence[str] | None) -> tuple[list[str], list[str]]:
    if not top:
        raise ConfigError("need at least one top annotator")
    unknown = sorted(set(top) - set(s.annotator_ids))
    if unknown:
        raise ReferentialError(f"unknown annotators {unknown}")
    image_ids = [im.id for im in s.images] if images is None else list(images)
    for i in image_ids:
        s.image(i)
    return sorted(set(top)), image_ids


def _select(s: AnnotationSet, choice: Mapping[str, str], recipe: str, seed: int | None) -> GroundTruthSet:
    image_ids = list(choice)
    wanted = set(choice.items())
    chosen_annotators = set(choice.values())
    base = AnnotationSet(
        tuple(s.image(i) for i in image_ids),
        tuple(a for a in s.annotators if a.id in chosen_annotators),
        s.labels,
        tuple(b for b in s.boxes if (b.image_id, b.annotator_id) in wanted),
        frozenset(choice.items()),
        s.notes,
    )
    return GroundTruthSet(base, dict(choice), recipe, seed)


def build_gt_mixed(s: AnnotationSet, top: Sequence[str], images: Sequence[str] | None = None, seed: int = 0) -> GroundTruthSet:
    """Per image, one top annotator drawn uniformly among those who processed it."""
    top, image_ids = _resolve(s, top, images)
    holes = [i for i in image_ids if not any(s.participated(i, a) for a in top)]
    if holes:
        raise CoverageError(f"images covered by no top annotator: {holes}", holes)
    choice = {}
    for i in image_ids:
        candidates = [a for a in top if s.participated(i, a)]
        rng = Xoshiro256(derive_seed(seed, "gt-mixed", i))
        choice[i] = candidates[rng.integers(0, len(candidates))]
    return _select(s, choice, "mixed_top", seed)


def build_gt_single(s: AnnotationSet, top: Sequence[str], images: Sequence[str] | None = None, seed: int = 0) -> GroundTruthSet:
    """One top annotator drawn uniformly and used for every image; no fallback on gaps."""
    top, image_ids = _resolve(s, top, images)
    rng = Xoshiro256(derive_seed(seed, "gt-single"))
    who = top[rng.integers(0, len(top))]
    holes = [i for i in image_ids if not s.participated(i, who)]
    if holes:
        raise CoverageError(f"annotator {who!r} did not annotate images {holes}", holes)
    return _select(s, {i: who for i in image_ids}, "single_top", seed)


def import_original_gt(
    payload: bytes | str | AnnotationSet,
    label_map: LabelMap | None = None,
    vocabulary: Sequence[str] | None = None,
    *,
    format: str = "canonical-json",
    header: AnnotationSet | Mapping[str, Any] | None = None,
) -> GroundTruthSet:
    """Wrap externally released labels as a ground-truth set.

    All boxes are attributed to the pseudo-annotator ``"original"``.
    ``vocabulary``, when given, is the working vocabulary the mapped labels
    must fall into (e.g. the annotation set being evaluated against).
    """
    label_map = label_map or LabelMap()
    if isinstance(payload, AnnotationSet):
        s = apply_label_mapping(payload, label_map, vocabulary)
    else:
        s = parse_annotation_set(payload, format, label_map=label_map, header=header)
        if vocabulary is not None:
            s = apply_label_mapping(s, LabelMap(), vocabulary)
    boxes = tuple(replace(b, annotator_id=ORIGINAL) for b in s.boxes)
    base = AnnotationSet(
        s.images,
        (Annotator(ORIGINAL, "professional"),),
        s.labels,
        boxes,
        frozenset((im.id, ORIGINAL) for im in s.images),
        s.notes,
    )
    return GroundTruthSet(base, {im.id: ORIGINAL for im in s.images}, ORIGINAL, None)
