"""Leave-one-out annotator quality: rater vitality and class recognition difficulty.

The vitality of annotator ``i`` on an image is the image alpha with everyone
minus the alpha without ``i``, both computed over the same kept pixel units.
Negative vitality means the annotator pulls consensus down. Images the
annotator did not process are left out of its aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .agreement import AgreementConfig, median, alpha_per_image, aggregate_alpha, image_matrix, matrix_alpha
from .datamodel import AnnotationSet
from .errors import ConfigError, InsufficientDataError, ReferentialError


@dataclass
class VitalityReport:
    annotator_id: str
    per_image: dict[str, float]
    mean_V: float
    median_V: float
    K_full_mean: float
    K_loo_mean: float
    k_full: dict[str, float] = field(default_factory=dict, repr=False)
    k_loo: dict[str, float] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "mean_V": self.mean_V,
            "median_V": self.median_V,
            "k_full_mean": self.K_full_mean,
            "k_loo_mean": self.K_loo_mean,
            "per_image": [
                {"image_id": i, "V": v, "k_full": self.k_full[i], "k_loo": self.k_loo[i]} for i, v in self.per_image.items()
            ],
        }


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _check_pool(s: AnnotationSet, config: AgreementConfig) -> list[str]:
    pool = [a for a in s.annotator_ids if a not in config.exclude]
    if len(pool) < 3:
        raise InsufficientDataError(f"vitality needs at least 3 annotators, have {len(pool)}")
    return pool


def vitality_reports(
    s: AnnotationSet, config: AgreementConfig, annotators: Iterable[str] | None = None
) -> dict[str, VitalityReport]:
    """Vitality of several annotators, sharing one observation matrix per image.

    Annotators that processed no scorable image are absent from the result.
    """
    pool = _check_pool(s, config)
    targets = list(pool if annotators is None else annotators)
    for a in targets:
        if a not in pool:
            raise ReferentialError(f"annotator {a!r} is not in the scored pool")
    full: dict[str, dict[str, float]] = {a: {} for a in targets}
    loo: dict[str, dict[str, float]] = {a: {} for a in targets}
    for im in s.images:
        active = s.participants(im.id) - config.exclude
        here = [a for a in targets if a in active]
        if len(active) < 3 or not here:
            continue
        matrix = image_matrix(s, im.id, config)
        k_full = matrix_alpha(matrix, config).alpha
        for a in here:
            full[a][im.id] = k_full
            loo[a][im.id] = matrix_alpha(matrix.without(a), config).alpha
    reports = {}
    for a in targets:
        if not full[a]:
            continue
        per_image = {i: full[a][i] - loo[a][i] for i in full[a]}
        values = list(per_image.values())
        reports[a] = VitalityReport(
            a,
            per_image,
            _mean(values),
            median(values),
            _mean(list(full[a].values())),
            _mean(list(loo[a].values())),
            full[a],
            loo[a],
        )
    return reports


def vitality(s: AnnotationSet, annotator: str, config: AgreementConfig) -> VitalityReport:
    if annotator not in s.annotator_ids:
        raise ReferentialError(f"unknown annotator {annotator!r}")
    reports = vitality_reports(s, config, [annotator])
    if annotator not in reports:
        raise InsufficientDataError(f"annotator {annotator!r} took part in no image with at least 3 annotators")
    return reports[annotator]


@dataclass
class ClassDifficultyReport:
    class_label: str
    mean_class_alpha: float
    median_class_alpha: float
    per_annotator_vitality: dict[str, float]
    per_image: dict[str, float]
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "class": self.class_label,
            "mean_class_alpha": self.mean_class_alpha,
            "median_class_alpha": self.median_class_alpha,
            "degenerate": self.degenerate,
            "per_annotator_vitality": self.per_annotator_vitality,
            "per_image": [{"image_id": i, "alpha": a} for i, a in self.per_image.items()],
        }


def class_difficulty(s: AnnotationSet, class_label: str, config: AgreementConfig) -> ClassDifficultyReport:
    """Class-restricted alpha per image plus each annotator's vitality on that class.

    A class nobody labelled yields alpha 1 on every image with the
    ``degenerate`` flag set.
    """
    if class_label not in s.labels:
        raise ConfigError(f"unknown class {class_label!r}")
    cfg = replace(config, class_label=class_label, channel_mode="pooled")
    results = alpha_per_image(s, cfg)
    summary = aggregate_alpha(results)
    scored = {i: r for i, r in results.items() if r is not None}
    vitalities: dict[str, float] = {}
    if len([a for a in s.annotator_ids if a not in cfg.exclude]) >= 3:
        vitalities = {a: r.mean_V for a, r in vitality_reports(s, cfg).items()}
    return ClassDifficultyReport(
        class_label,
        summary.mean,
        summary.median,
        vitalities,
        {i: r.alpha for i, r in scored.items()},
        all(r.degenerate for r in scored.values()),
    )


def hardest_class(reports: Sequence[ClassDifficultyReport]) -> str:
    """Class with the lowest mean alpha (ties: vocabulary order as given)."""
    if not reports:
        raise ConfigError("no class reports")
    return min(reports, key=lambda r: r.mean_class_alpha).class_label


@dataclass(frozen=True)
class RankEntry:
    annotator_id: str
    mean_V: float
    tied: bool = False


def rank_annotators(reports: Iterable[VitalityReport]) -> list[RankEntry]:
    """Descending mean vitality; equal scores fall back to annotator id order and are flagged."""
    reports = list(reports)
    if not reports:
        raise ConfigError("no vitality reports to rank")
    ordered = sorted(reports, key=lambda r: (-r.mean_V, r.annotator_id))
    values = [r.mean_V for r in ordered]
    return [RankEntry(r.annotator_id, r.mean_V, values.count(r.mean_V) > 1) for r in ordered]


def top_annotators(ranking: Sequence[RankEntry], top_k: int | None = None, min_vitality: float | None = None) -> list[str]:
    """Apply a selection policy to a ranking: the first ``top_k`` and/or all with ``mean_V >= min_vitality``."""
    if top_k is None and min_vitality is None:
        raise ConfigError("need top_k or min_vitality")
    chosen = list(ranking)
    if min_vitality is not None:
        chosen = [e for e in chosen if e.mean_V >= min_vitality]
    if top_k is not None:
        if top_k < 1:
            raise ConfigError("top_k must be positive")
        chosen = chosen[:top_k]
    if not chosen:
        raise ConfigError("selection policy kept no annotator")
    return [e.annotator_id for e in chosen]
