"""Seeded synthetic scenes, noisy annotators and a noisy pseudo-detector.

Noise model per truth box, in order: miss with probability ``p_miss``;
scale width and height about the centre by ``scale_bias``; move each of the
four edges independently by ``round(jitter_sigma * N(0, 1))`` pixels;
re-clamp to the image keeping at least one pixel; replace the label by a
draw from the ``confusion`` row. Then ``Poisson(p_spurious)`` extra boxes
are added per image. Every image draws from its own generator derived from
the seed and the image's position, so output is a pure function of inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .datamodel import AnnotationSet, Annotator, Box, ImageRef, LabeledBox, merge_sets
from .errors import ConfigError
from .rng import Xoshiro256, derive_seed

DEFAULT_CLASSES = ("person", "vehicle", "bicycle")


@dataclass(frozen=True)
class SceneSpec:
    width: int = 320
    height: int = 240
    n_images: int = 10
    objects_per_image: int | tuple[int, int] = 5
    class_mix: Mapping[str, float] = field(default_factory=lambda: {c: 1.0 for c in DEFAULT_CLASSES})
    min_size: int = 8
    max_size: int = 48
    seed: int = 0
    image_prefix: str = "img"

    def __post_init__(self):
        object.__setattr__(self, "class_mix", dict(self.class_mix))
        if isinstance(self.objects_per_image, list):
            object.__setattr__(self, "objects_per_image", tuple(self.objects_per_image))
        if self.width < 1 or self.height < 1 or self.n_images < 0:
            raise ConfigError("scene needs positive dimensions and a non-negative image count")
        if self.min_size < 1 or self.min_size > self.max_size:
            raise ConfigError("need 1 <= min_size <= max_size")
        if self.min_size > min(self.width, self.height):
            raise ConfigError(f"min_size {self.min_size} does not fit a {self.width}x{self.height} image")
        if not self.class_mix or any(w < 0 for w in self.class_mix.values()) or sum(self.class_mix.values()) <= 0:
            raise ConfigError("class_mix needs non-negative weights with a positive total")
        lo, hi = self._object_range()
        if lo < 0 or hi < lo:
            raise ConfigError("objects_per_image must be a count or a (low, high) range")

    def _object_range(self) -> tuple[int, int]:
        if isinstance(self.objects_per_image, int):
            return self.objects_per_image, self.objects_per_image
        lo, hi = self.objects_per_image
        return int(lo), int(hi)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.class_mix)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SceneSpec":
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad scene spec: {exc}") from None


def generate_truth(spec: SceneSpec) -> AnnotationSet:
    """Random in-bounds boxes; annotator id ``"truth"``."""
    labels = spec.labels
    weights = [spec.class_mix[c] for c in labels]
    lo, hi = spec._object_range()
    images = tuple(ImageRef(f"{spec.image_prefix}{k:04d}", spec.width, spec.height) for k in range(spec.n_images))
    boxes = []
    for k, im in enumerate(images):
        rng = Xoshiro256(derive_seed(spec.seed, "scene", k))
        count = rng.integers(lo, hi + 1)
        for _ in range(count):
            w = rng.integers(spec.min_size, min(spec.max_size, spec.width) + 1)
            h = rng.integers(spec.min_size, min(spec.max_size, spec.height) + 1)
            x = rng.integers(0, spec.width - w + 1)
            y = rng.integers(0, spec.height - h + 1)
            label = labels[rng.choice_index(weights)]
            boxes.append(LabeledBox(im.id, "truth", label, Box(x, y, w, h)))
    return AnnotationSet(
        images,
        (Annotator("truth", "professional"),),
        labels,
        tuple(boxes),
        frozenset((im.id, "truth") for im in images),
    )


@dataclass(frozen=True)
class NoiseProfile:
    p_miss: float = 0.0
    jitter_sigma: float = 0.0
    scale_bias: float = 1.0
    confusion: Mapping[str, Mapping[str, float]] | None = None
    p_spurious: float = 0.0
    spurious_size: tuple[int, int] = (8, 48)

    def __post_init__(self):
        if not 0.0 <= self.p_miss <= 1.0:
            raise ConfigError("p_miss must lie in [0, 1]")
        if self.jitter_sigma < 0 or self.scale_bias <= 0 or self.p_spurious < 0:
            raise ConfigError("need jitter_sigma >= 0, scale_bias > 0, p_spurious >= 0")
        lo, hi = self.spurious_size
        object.__setattr__(self, "spurious_size", (int(lo), int(hi)))
        if lo < 1 or hi < lo:
            raise ConfigError("spurious_size must be a (low, high) range of positive sizes")
        if self.confusion is not None:
            rows = {src: dict(row) for src, row in self.confusion.items()}
            for src, row in rows.items():
                if any(p < 0 for p in row.values()) or abs(sum(row.values()) - 1.0) > 1e-9:
                    raise ConfigError(f"confusion row {src!r} must be a probability distribution")
            object.__setattr__(self, "confusion", rows)

    def check_labels(self, labels: Sequence[str]):
        if self.confusion is None:
            return
        vocab = set(labels)
        for src, row in self.confusion.items():
            bad = ({src} | set(row)) - vocab
            if bad:
                raise ConfigError(f"confusion refers to unknown labels {sorted(bad)}")

    def scaled(self, jitter: float = 1.0, miss: float = 1.0) -> "NoiseProfile":
        """Copy with jitter and miss rate multiplied (miss capped at 1)."""
        return NoiseProfile(
            min(1.0, self.p_miss * miss), self.jitter_sigma * jitter, self.scale_bias, self.confusion, self.p_spurious, self.spurious_size
        )

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "NoiseProfile":
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad noise profile: {exc}") from None


def _edges(lo: int, hi: int, limit: int) -> tuple[int, int]:
    lo = min(max(lo, 0), limit - 1)
    hi = min(max(hi, lo + 1), limit)
    return lo, hi


def _perturb(truth: AnnotationSet, profile: NoiseProfile, seed: int, annotator_id: str, stream: str):
    """Yield ``(LabeledBox, magnitude)``; magnitude is 0 for an untouched box."""
    profile.check_labels(truth.labels)
    labels = truth.labels
    for k, im in enumerate(truth.images):
        rng = Xoshiro256(derive_seed(seed, stream, k))
        for b in truth.boxes_for(im.id):
            if profile.p_miss > 0 and rng.random() < profile.p_miss:
                continue
            box = b.box
            x0, y0, x1, y1 = box.x, box.y, box.x1, box.y1
            if profile.scale_bias != 1.0:
                w = max(1, round(box.w * profile.scale_bias))
                h = max(1, round(box.h * profile.scale_bias))
                x0 = round(box.x + (box.w - w) / 2)
                y0 = round(box.y + (box.h - h) / 2)
                x1, y1 = x0 + w, y0 + h
            if profile.jitter_sigma > 0:
                x0 += round(profile.jitter_sigma * rng.normal())
                x1 += round(profile.jitter_sigma * rng.normal())
                y0 += round(profile.jitter_sigma * rng.normal())
                y1 += round(profile.jitter_sigma * rng.normal())
            x0, x1 = _edges(x0, x1, im.width)
            y0, y1 = _edges(y0, y1, im.height)
            moved = abs(x0 - box.x) + abs(x1 - box.x1) + abs(y0 - box.y) + abs(y1 - box.y1)
            label = b.label
            if profile.confusion is not None and label in profile.confusion:
                row = profile.confusion[label]
                targets = [c for c in labels if c in row]
                label = targets[rng.choice_index([row[c] for c in targets])]
            magnitude = moved / (box.w + box.h) + (1.0 if label != b.label else 0.0)
            yield LabeledBox(im.id, annotator_id, label, Box(x0, y0, x1 - x0, y1 - y0)), magnitude
        for _ in range(rng.poisson(profile.p_spurious)):
            lo, hi = profile.spurious_size
            w = rng.integers(min(lo, im.width), min(hi, im.width) + 1)
            h = rng.integers(min(lo, im.height), min(hi, im.height) + 1)
            x = rng.integers(0, im.width - w + 1)
            y = rng.integers(0, im.height - h + 1)
            label = labels[rng.integers(0, len(labels))]
            yield LabeledBox(im.id, annotator_id, label, Box(x, y, w, h)), 1.0 + rng.random()


def simulate_annotator(
    truth: AnnotationSet, profile: NoiseProfile, annotator_id: str, seed: int, tier: str = "professional"
) -> AnnotationSet:
    """Noisy copy of ``truth`` by one annotator who processed every image."""
    boxes = tuple(b for b, _ in _perturb(truth, profile, seed, annotator_id, "annotator"))
    return AnnotationSet(
        truth.images,
        (Annotator(annotator_id, tier),),
        truth.labels,
        boxes,
        frozenset((im.id, annotator_id) for im in truth.images),
    )


def simulate_detector(
    truth: AnnotationSet,
    profile: NoiseProfile,
    seed: int,
    *,
    score_base: float = 0.9,
    score_penalty: float = 0.5,
    score_noise: float = 0.05,
    annotator_id: str = "detector",
) -> AnnotationSet:
    """Noisy predictions with confidence ``clamp(base - penalty * magnitude - noise, 0, 1)``.

    Magnitude is the summed edge displacement over ``w + h``, plus one for a
    changed label; spurious boxes get magnitude in [1, 2). Heavier
    perturbation therefore scores lower.
    """
    rng = Xoshiro256(derive_seed(seed, "detector-scores"))
    boxes = []
    for b, magnitude in _perturb(truth, profile, seed, annotator_id, "detector"):
        score = score_base - score_penalty * magnitude - score_noise * rng.random()
        boxes.append(LabeledBox(b.image_id, b.annotator_id, b.label, b.box, min(1.0, max(0.0, score))))
    return AnnotationSet(
        truth.images,
        (Annotator(annotator_id, "model"),),
        truth.labels,
        tuple(boxes),
        frozenset((im.id, annotator_id) for im in truth.images),
    )


def simulate_corpus(truth: AnnotationSet, profiles: Mapping[str, NoiseProfile], seed: int) -> AnnotationSet:
    """Several simulated annotators over the same truth, merged into one set."""
    if not profiles:
        raise ConfigError("need at least one annotator profile")
    sets = [simulate_annotator(truth, p, a, derive_seed(seed, "annotator", a)) for a, p in profiles.items()]
    return merge_sets(sets)
