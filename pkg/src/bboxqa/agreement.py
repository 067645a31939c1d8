"""Krippendorff's alpha with the nominal difference function.

For a unit carrying ``m >= 2`` values, every ordered pair of values from
distinct raters adds ``1 / (m - 1)`` to the coincidence matrix ``o``. With
marginals ``n_x`` and total ``n``::

    D_o = sum_{x != x'} o[x, x']
    D_e = sum_{x != x'} n_x * n_x' / (n - 1)
    alpha = 1 - D_o / D_e

Pixel images are scored with two categories per unit (unlabeled/labeled);
classes live in separate channels, so one image alpha pools all
``pixel x class`` units.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .datamodel import AnnotationSet
from .errors import ConfigError, InsufficientDataError, ReferentialError
from .raster import DEFAULT_DROP_FRACTION, ObservationMatrix, build_observation_matrix, rasterize, restrict_to_class
from .rng import derive_seed

CHANNEL_MODES = ("pooled", "mean")


@dataclass(frozen=True, eq=False)
class CoincidenceMatrix:
    categories: tuple
    o: np.ndarray
    n_x: np.ndarray  # int64 marginals
    n: int
    skipped_units: int = 0
    pairable_units: int = 0
    tallies: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_tallies(cls, tallies: np.ndarray, categories, skipped: int = 0, pairable: int = 0) -> "CoincidenceMatrix":
        """Divide integer pair tallies by ``m - 1`` in ascending ``m`` order."""
        k = tallies.shape[1]
        o = np.zeros((k, k))
        n_x = np.zeros(k, dtype=np.int64)
        for m in range(2, tallies.shape[0]):
            t = tallies[m]
            if not t.any():
                continue
            o += t / (m - 1)
            n_x += t.sum(axis=1) // (m - 1)
        return cls(tuple(categories), o, n_x, int(n_x.sum()), skipped, pairable, tallies)


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    D_o: float
    D_e: float
    unit_count: int
    rater_count: int
    degenerate: bool = False
    skipped_units: int = 0


class AgreementBand(str, enum.Enum):
    VERY_GOOD = "very_good"
    GOOD = "good"
    BELOW_GOOD = "below_good"


GOOD_THRESHOLD = 0.67
VERY_GOOD_THRESHOLD = 0.8


def classify_alpha(alpha: float) -> AgreementBand:
    if alpha >= VERY_GOOD_THRESHOLD:
        return AgreementBand.VERY_GOOD
    if alpha >= GOOD_THRESHOLD:
        return AgreementBand.GOOD
    return AgreementBand.BELOW_GOOD


# -- coincidence and alpha ---------------------------------------------------


def _pixel_tallies(matrix: ObservationMatrix) -> tuple[np.ndarray, int, int, int]:
    px = matrix._pixels
    active = np.flatnonzero(px.participating)
    m = len(active)
    n_units = matrix.n_units
    if m < 2 or n_units == 0:
        return np.zeros((max(m, 1) + 1, 2, 2), np.int64), n_units, 0, m
    ones, disagree = kernels.pair_counts(px.planes[active], px.mask)
    n1 = int(ones.sum())
    d = int(disagree.sum())
    # sum over rater pairs of units where both / neither rater labelled
    both = ((m - 1) * n1 - d) // 2
    neither = (m * (m - 1) // 2) * n_units - (m - 1) * n1 + both
    tallies = np.zeros((m + 1, 2, 2), np.int64)
    tallies[m] = [[2 * neither, d], [d, 2 * both]]
    return tallies, 0, n_units, m


def _dense_tallies(matrix: ObservationMatrix) -> tuple[np.ndarray, int, int, int]:
    values = matrix.values
    tallies, skipped = kernels.coincidence_tallies(values, len(matrix.categories))
    raters = int((values >= 0).any(axis=0).sum()) if values.size else 0
    return tallies, skipped, matrix.n_units - skipped, raters


def _tallies(matrix: ObservationMatrix):
    return _pixel_tallies(matrix) if matrix.is_pixel else _dense_tallies(matrix)


def accumulate_coincidence(matrix: ObservationMatrix) -> CoincidenceMatrix:
    tallies, skipped, pairable, _ = _tallies(matrix)
    if pairable == 0:
        raise InsufficientDataError("no unit carries two or more values")
    return CoincidenceMatrix.from_tallies(tallies, matrix.categories, skipped, pairable)


def alpha_from_coincidence(cm: CoincidenceMatrix, rater_count: int = 0) -> AlphaResult:
    n = cm.n
    if n < 2:
        raise InsufficientDataError(f"need at least two pairable values, got {n}")
    off = ~np.eye(len(cm.categories), dtype=bool)
    d_o = float(cm.o[off].sum())
    n_x = [int(v) for v in cm.n_x]
    expected_pairs = n * n - sum(v * v for v in n_x)  # exact integer sum_{x != x'} n_x n_x'
    d_e = expected_pairs / (n - 1)
    if expected_pairs == 0:
        return AlphaResult(1.0, d_o, 0.0, cm.pairable_units, rater_count, True, cm.skipped_units)
    return AlphaResult(1.0 - d_o / d_e, d_o, d_e, cm.pairable_units, rater_count, False, cm.skipped_units)


def krippendorff_alpha(matrix: ObservationMatrix) -> AlphaResult:
    """Fast path: coincidence from popcounts (pixel matrices) or integer tallies."""
    tallies, skipped, pairable, raters = _tallies(matrix)
    if pairable == 0:
        raise InsufficientDataError("no unit carries two or more values")
    cm = CoincidenceMatrix.from_tallies(tallies, matrix.categories, skipped, pairable)
    return alpha_from_coincidence(cm, raters)


def brute_force_alpha(matrix: ObservationMatrix) -> AlphaResult:
    """Reference alpha by direct pair enumeration, for testing the fast path.

    Observed disagreement walks every pair of raters within every unit;
    expected disagreement compares every pooled value with every other pooled
    value. No coincidence matrix is formed.
    """
    values = matrix.values.astype(np.int64)
    present = values >= 0
    m = present.sum(axis=1)
    pairable = m >= 2
    if not pairable.any():
        raise InsufficientDataError("no unit carries two or more values")
    weight = np.zeros(len(m))
    weight[pairable] = 1.0 / (m[pairable] - 1)
    d_o = 0.0
    n_raters = values.shape[1]
    for a in range(n_raters):
        for b in range(n_raters):
            if a == b:
                continue
            both = present[:, a] & present[:, b]
            differ = both & (values[:, a] != values[:, b])
            d_o += float(weight[differ].sum())

    pooled = values[pairable][present[pairable]]
    n = len(pooled)
    counts = np.bincount(pooled)
    # for each pooled value, the number of other pooled values that differ from it
    differing_pairs = int((n - counts[pooled]).sum())
    d_e = differing_pairs / (n - 1)
    raters = int(present.any(axis=0).sum())
    skipped = int((~pairable).sum())
    if differing_pairs == 0:
        return AlphaResult(1.0, d_o, 0.0, int(pairable.sum()), raters, True, skipped)
    return AlphaResult(1.0 - d_o / d_e, d_o, d_e, int(pairable.sum()), raters, False, skipped)


# -- per-image pipeline --------------------------------------------------------


@dataclass(frozen=True)
class AgreementConfig:
    """Settings shared by agreement, vitality and class-difficulty runs.

    ``seed`` is mixed with each image id to pick that image's kept pixels.
    """

    drop_fraction: float = DEFAULT_DROP_FRACTION
    seed: int = 0
    class_label: str | None = None
    exclude: frozenset[str] = frozenset()
    channel_mode: str = "pooled"

    def __post_init__(self):
        object.__setattr__(self, "exclude", frozenset(self.exclude))
        if not 0.0 <= self.drop_fraction < 1.0:
            raise ConfigError("drop_fraction must lie in [0, 1)")
        if self.channel_mode not in CHANNEL_MODES:
            raise ConfigError(f"channel_mode must be one of {CHANNEL_MODES}")

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "drop_fraction": self.drop_fraction}
        if self.class_label is not None:
            out["class"] = self.class_label
        if self.exclude:
            out["excluded"] = sorted(self.exclude)
        if self.channel_mode != "pooled":
            out["channel_mode"] = self.channel_mode
        return out


def image_seed(seed: int, image_id: str) -> int:
    return derive_seed(seed, "pixel-drop", image_id)


def image_matrix(s: AnnotationSet, image_id: str, config: AgreementConfig) -> ObservationMatrix:
    """Observation matrix of one image over every non-excluded annotator.

    Class filtering is not applied here; see ``restrict_to_class``.
    """
    image = s.image(image_id)
    stacks = []
    participation = {}
    for a in s.annotator_ids:
        if a in config.exclude:
            continue
        stacks.append(rasterize(image, s.boxes_for(image_id, a), s.labels, annotator_id=a))
        participation[a] = s.participated(image_id, a)
    if not stacks:
        raise InsufficientDataError(f"image {image_id!r}: no annotators left after exclusion")
    return build_observation_matrix(stacks, participation, config.drop_fraction, image_seed(config.seed, image_id))


def _participating(matrix: ObservationMatrix) -> int:
    return int(matrix._pixels.participating.sum())


def matrix_alpha(matrix: ObservationMatrix, config: AgreementConfig) -> AlphaResult:
    """Alpha of an image matrix under the config's class filter and channel mode."""
    if config.class_label is not None:
        return krippendorff_alpha(restrict_to_class(matrix, config.class_label))
    if config.channel_mode == "pooled":
        return krippendorff_alpha(matrix)
    per_channel = [krippendorff_alpha(restrict_to_class(matrix, label)) for label in matrix._pixels.labels]
    informative = [r for r in per_channel if not r.degenerate] or per_channel
    alpha = math.fsum(r.alpha for r in informative) / len(informative)
    return AlphaResult(
        alpha,
        math.fsum(r.D_o for r in per_channel),
        math.fsum(r.D_e for r in per_channel),
        sum(r.unit_count for r in per_channel),
        per_channel[0].rater_count,
        all(r.degenerate for r in per_channel),
        sum(r.skipped_units for r in per_channel),
    )


def alpha_per_image(s: AnnotationSet, config: AgreementConfig, images=None) -> dict[str, AlphaResult | None]:
    """Alpha for each image; ``None`` marks images with fewer than two participating annotators."""
    image_ids = [im.id for im in s.images] if images is None else list(images)
    if not image_ids:
        raise ConfigError("no images to score")
    unknown = set(config.exclude) - set(s.annotator_ids)
    if unknown:
        raise ReferentialError(f"cannot exclude unknown annotators {sorted(unknown)}")
    if config.class_label is not None and config.class_label not in s.labels:
        raise ConfigError(f"unknown class {config.class_label!r}")
    out: dict[str, AlphaResult | None] = {}
    for image_id in image_ids:
        active = s.participants(image_id) - config.exclude
        if len(active) < 2:
            out[image_id] = None
            continue
        out[image_id] = matrix_alpha(image_matrix(s, image_id, config), config)
    return out


@dataclass(frozen=True)
class AlphaSummary:
    mean: float
    median: float
    count: int

    @property
    def band(self) -> AgreementBand:
        return classify_alpha(self.mean)


def median(values: list[float]) -> float:
    v = sorted(values)
    k = len(v)
    mid = k // 2
    return v[mid] if k % 2 else (v[mid - 1] + v[mid]) / 2


def aggregate_alpha(results: Mapping[str, AlphaResult | float | None]) -> AlphaSummary:
    """Unweighted mean and median over non-skipped images, in image order."""
    alphas = [r.alpha if isinstance(r, AlphaResult) else float(r) for r in results.values() if r is not None]
    if not alphas:
        raise InsufficientDataError("every image was skipped")
    return AlphaSummary(math.fsum(alphas) / len(alphas), median(alphas), len(alphas))


def agreement_report(results: Mapping[str, AlphaResult | None], config: AgreementConfig) -> dict:
    summary = aggregate_alpha(results)
    per_image = []
    for image_id, r in results.items():
        if r is None:
            per_image.append({"image_id": image_id, "alpha": None, "units": 0, "raters": 0, "degenerate": False, "skipped": True})
        else:
            per_image.append(
                {"image_id": image_id, "alpha": r.alpha, "units": r.unit_count, "raters": r.rater_count, "degenerate": r.degenerate}
            )
    return {
        "per_image": per_image,
        "mean": summary.mean,
        "median": summary.median,
        "band": summary.band.value,
        "config": config.to_dict(),
    }
