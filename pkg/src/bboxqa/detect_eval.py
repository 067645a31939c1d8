"""Detector evaluation against a ground-truth set.

IoU is a ratio of pixel counts on half-open integer boxes, so it is exact.
Matching is greedy and one-to-one per image: predictions in descending score
order (ties: larger area first, then input order) take the unmatched
same-label ground-truth box with the highest IoU at or above the threshold.
A prediction that fails but overlaps an unmatched box of another label at or
above the threshold is a misclassification; it counts as a false positive
and leaves that ground-truth box available.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .curation import GroundTruthSet
from .datamodel import AnnotationSet, Box, LabeledBox
from .errors import ConfigError, EvaluationError

CAP_SCOPES = ("global", "per_image")
AVERAGES = ("micro", "macro")


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    cap: int | None = None
    cap_scope: str = "global"
    per_class: bool = True
    average: str = "micro"

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError("iou_threshold must lie in (0, 1]")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("cap must be a positive integer")
        if self.cap_scope not in CAP_SCOPES:
            raise ConfigError(f"cap_scope must be one of {CAP_SCOPES}")
        if self.average not in AVERAGES:
            raise ConfigError(f"average must be one of {AVERAGES}")

    def to_dict(self) -> dict:
        out = {"iou_threshold": self.iou_threshold, "cap": self.cap, "cap_scope": self.cap_scope}
        if self.average != "micro":
            out["average"] = self.average
        return out


# -- IoU ---------------------------------------------------------------------


def iou_counts(a: Box, b: Box) -> tuple[int, int]:
    """Intersection and union pixel counts."""
    iw = min(a.x1, b.x1) - max(a.x, b.x)
    ih = min(a.y1, b.y1) - max(a.y, b.y)
    inter = iw * ih if iw > 0 and ih > 0 else 0
    return inter, a.area + b.area - inter


def iou(a: Box, b: Box) -> float:
    inter, union = iou_counts(a, b)
    return inter / union


def labeled_iou(a: LabeledBox, b: LabeledBox) -> float:
    """IoU when the labels agree, zero otherwise."""
    if a.label != b.label:
        return 0.0
    return iou(a.box, b.box)


def _at_least(inter: int, union: int, threshold: tuple[int, int]) -> bool:
    num, den = threshold
    return inter * den >= num * union


# -- capping -----------------------------------------------------------------


def _rank_key(item: tuple[int, LabeledBox]):
    idx, p = item
    return (-p.score, -p.box.area, idx)


def _require_scores(preds: Sequence[LabeledBox]):
    for i, p in enumerate(preds):
        if p.score is None:
            raise EvaluationError(f"prediction #{i} on image {p.image_id!r} has no score")


def cap_predictions(preds: Sequence[LabeledBox], cfg: EvalConfig) -> list[LabeledBox]:
    """Keep the ``cfg.cap`` best-scoring predictions (globally or per image), in input order."""
    preds = list(preds)
    _require_scores(preds)
    if cfg.cap is None:
        return preds
    ranked = sorted(enumerate(preds), key=_rank_key)
    if cfg.cap_scope == "global":
        kept = {i for i, _ in ranked[: cfg.cap]}
    else:
        per_image: dict[str, int] = defaultdict(int)
        kept = set()
        for i, p in ranked:
            if per_image[p.image_id] < cfg.cap:
                per_image[p.image_id] += 1
                kept.add(i)
    return [p for i, p in enumerate(preds) if i in kept]


# -- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class Match:
    prediction: LabeledBox
    gt: LabeledBox
    iou: float


@dataclass
class ImageMatch:
    matched: list[Match] = field(default_factory=list)
    misclassified: list[Match] = field(default_factory=list)
    unmatched_predictions: list[LabeledBox] = field(default_factory=list)
    unmatched_gts: list[LabeledBox] = field(default_factory=list)


@dataclass
class MatchResult:
    per_image: dict[str, ImageMatch]


def _as_predictions(preds) -> list[LabeledBox]:
    if isinstance(preds, AnnotationSet):
        return list(preds.boxes)
    return list(preds)


def _as_gt(gt) -> AnnotationSet:
    if isinstance(gt, GroundTruthSet):
        return gt.base
    if isinstance(gt, AnnotationSet):
        return gt
    raise EvaluationError("ground truth must be a GroundTruthSet or AnnotationSet")


def _match_image(preds: list[LabeledBox], gts: list[LabeledBox], threshold: tuple[int, int]) -> ImageMatch:
    result = ImageMatch()
    taken = [False] * len(gts)
    for _, p in sorted(enumerate(preds), key=_rank_key):
        best = None
        best_iou = (0, 1)
        other = None
        for g_idx, g in enumerate(gts):
            if taken[g_idx]:
                continue
            inter, union = iou_counts(p.box, g.box)
            if not _at_least(inter, union, threshold):
                continue
            if g.label == p.label:
                # strictly greater keeps the lowest index on ties
                if best is None or inter * best_iou[1] > best_iou[0] * union:
                    best, best_iou = g_idx, (inter, union)
            elif other is None or inter * other[2] > other[1] * union:
                other = (g_idx, inter, union)
        if best is not None:
            taken[best] = True
            result.matched.append(Match(p, gts[best], best_iou[0] / best_iou[1]))
        elif other is not None:
            g_idx, inter, union = other
            result.misclassified.append(Match(p, gts[g_idx], inter / union))
        else:
            result.unmatched_predictions.append(p)
    result.unmatched_gts = [g for g, t in zip(gts, taken) if not t]
    return result


def match_detections(preds, gt, cfg: EvalConfig = EvalConfig()) -> MatchResult:
    """Greedy one-to-one matching of predictions to ground truth, image by image.

    Capping from ``cfg`` is applied first. Every ground-truth image appears in
    the result, including images without predictions.
    """
    base = _as_gt(gt)
    preds = cap_predictions(_as_predictions(preds), cfg)
    images = [im.id for im in base.images]
    known = set(images)
    vocab = set(base.labels)
    by_image: dict[str, list[LabeledBox]] = {i: [] for i in images}
    for p in preds:
        if p.image_id not in known:
            raise EvaluationError(f"prediction on image {p.image_id!r} which has no ground truth")
        if p.label not in vocab:
            raise EvaluationError(f"prediction label {p.label!r} not in ground-truth vocabulary {list(base.labels)}")
        by_image[p.image_id].append(p)
    threshold = float(cfg.iou_threshold).as_integer_ratio()
    return MatchResult({i: _match_image(by_image[i], base.boxes_for(i), threshold) for i in images})


# -- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    misclassified: int
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, misclassified: int = 0) -> "Metrics":
        p_undef = tp + fp == 0
        r_undef = tp + fn == 0
        precision = 0.0 if p_undef else tp / (tp + fp)
        recall = 0.0 if r_undef else tp / (tp + fn)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        return cls(tp, fp, fn, misclassified, precision, recall, f1, p_undef, r_undef)

    def to_dict(self) -> dict:
        out = {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "misclassified": self.misclassified,
        }
        if self.precision_undefined:
            out["precision_undefined"] = True
        if self.recall_undefined:
            out["recall_undefined"] = True
        return out


@dataclass
class EvalReport:
    overall: Metrics
    per_class: dict[str, Metrics]
    config: EvalConfig
    matches: MatchResult | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {"overall": self.overall.to_dict()}
        if self.config.per_class:
            out["per_class"] = {label: m.to_dict() for label, m in self.per_class.items()}
        out["config"] = self.config.to_dict()
        return out


def _count(matches: MatchResult, labels: Iterable[str]) -> dict[str, list[int]]:
    counts = {label: [0, 0, 0, 0] for label in labels}  # tp, fp, fn, misclassified
    for im in matches.per_image.values():
        for m in im.matched:
            counts[m.prediction.label][0] += 1
        for m in im.misclassified:
            counts[m.prediction.label][1] += 1
            counts[m.prediction.label][3] += 1
        for p in im.unmatched_predictions:
            counts[p.label][1] += 1
        for g in im.unmatched_gts:
            counts[g.label][2] += 1
    return counts


def evaluate(preds, gt, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Precision, recall, F1 and misclassifications, overall and per class.

    Per-class false positives and misclassifications are attributed to the
    predicted label, false negatives to the ground-truth label. ``micro``
    averaging pools counts; ``macro`` averages per-class precision, recall
    and F1 over classes present in predictions or ground truth.
    """
    base = _as_gt(gt)
    matches = match_detections(preds, gt, cfg)
    counts = _count(matches, base.labels)
    per_class = {label: Metrics.from_counts(*c) for label, c in counts.items()}
    tp, fp, fn, mis = (sum(c[k] for c in counts.values()) for k in range(4))
    overall = Metrics.from_counts(tp, fp, fn, mis)
    if cfg.average == "macro":
        present = [m for m in per_class.values() if m.tp + m.fp + m.fn > 0]
        if present:
            k = len(present)
            overall = Metrics(
                tp,
                fp,
                fn,
                mis,
                math.fsum(m.precision for m in present) / k,
                math.fsum(m.recall for m in present) / k,
                math.fsum(m.f1 for m in present) / k,
                overall.precision_undefined,
                overall.recall_undefined,
            )
    return EvalReport(overall, per_class, cfg, matches)
