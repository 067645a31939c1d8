"""Pixel rasterisation and observation matrices.

One annotator's boxes on one image become a stack of per-class binary
planes. Flattening channel-major (channel, then row, then column) gives one
observation unit per pixel and class; a seeded random subset of units is
kept. The kept subset depends only on ``(seed, C*H*W, drop_fraction)`` so the
full alpha, every leave-one-out alpha and every class alpha of an image see
the same units.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .datamodel import ImageRef, LabeledBox
from .errors import ConsistencyError, VocabularyError

MISSING = -1
UNLABELED = 0
LABELED = 1
PIXEL_CATEGORIES = ("unlabeled", "labeled")
DEFAULT_DROP_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class RasterStack:
    image_id: str
    annotator_id: str
    labels: tuple[str, ...]
    channels: np.ndarray  # (C, H, W) bool

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.channels.shape

    @cached_property
    def labeled_pixel_count(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.channels.reshape(len(self.labels), -1).sum(axis=1))


def rasterize(image: ImageRef, boxes: Sequence[LabeledBox], labels: Sequence[str], annotator_id: str | None = None) -> RasterStack:
    """Fill one boolean plane per label with the union of that label's boxes."""
    labels = tuple(labels)
    index = {label: c for c, label in enumerate(labels)}
    channels = np.zeros((len(labels), image.height, image.width), dtype=bool)
    for b in boxes:
        if b.image_id != image.id:
            raise ConsistencyError(f"box for image {b.image_id!r} passed with image {image.id!r}")
        if annotator_id is None:
            annotator_id = b.annotator_id
        elif b.annotator_id != annotator_id:
            raise ConsistencyError("rasterize expects boxes from a single annotator")
        c = index.get(b.label)
        if c is None:
            raise VocabularyError(f"label {b.label!r} not in vocabulary {list(labels)}")
        bx = b.box
        if bx.x1 > image.width or bx.y1 > image.height:
            raise ConsistencyError(f"box {bx.as_list()} exceeds {image.width}x{image.height} image {image.id!r}")
        channels[c, bx.y : bx.y1, bx.x : bx.x1] = True
    return RasterStack(image.id, annotator_id or "", labels, channels)


def write_pgm(stack: RasterStack, prefix: str | Path) -> list[Path]:
    """Debug dump: one binary PGM per channel, labelled pixels white."""
    paths = []
    _, h, w = stack.shape
    for label, plane in zip(stack.labels, stack.channels):
        path = Path(f"{prefix}_{stack.annotator_id}_{label}.pgm")
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write((plane.astype(np.uint8) * 255).tobytes())
        paths.append(path)
    return paths


@dataclass(frozen=True, eq=False)
class _PixelPlanes:
    planes: np.ndarray  # (R, W) uint64, one row per rater
    mask: np.ndarray  # (W,) uint64 retained units
    participating: np.ndarray  # (R,) bool
    shape: tuple[int, int, int]
    labels: tuple[str, ...]


class ObservationMatrix:
    """Units x raters table of category codes with ``-1`` for missing.

    Two flavours share this type. Pixel matrices come from
    ``build_observation_matrix`` and keep packed bit-planes so agreement can be
    counted with popcounts; ``values`` is materialised lazily. General
    matrices wrap a dense array (``from_values``) and support any nominal
    categories.
    """

    def __init__(
        self,
        units: np.ndarray,
        raters: Sequence[str],
        categories: Sequence[str],
        *,
        values: np.ndarray | None = None,
        seed: int | None = None,
        drop_fraction: float = 0.0,
        _pixels: _PixelPlanes | None = None,
    ):
        if values is None and _pixels is None:
            raise ValueError("need values or pixel planes")
        self.units = np.asarray(units, dtype=np.int64)
        self.raters = tuple(raters)
        self.categories = tuple(categories)
        self.seed = seed
        self.drop_fraction = drop_fraction
        self._pixels = _pixels
        if values is not None:
            values = np.asarray(values, dtype=np.int8)
            if values.shape != (len(self.units), len(self.raters)):
                raise ConsistencyError(f"values shape {values.shape} does not match units x raters")
            self._values = values
        if len(set(self.raters)) != len(self.raters):
            raise ConsistencyError("duplicate rater ids")

    @classmethod
    def from_values(cls, values, raters: Sequence[str] | None = None, categories: Sequence | None = None) -> "ObservationMatrix":
        """Dense matrix from a (units, raters) array of codes ``0..K-1``; ``-1`` (or NaN) is missing."""
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 2:
            raise ConsistencyError("values must be 2-D (units x raters)")
        missing = np.isnan(arr) | (arr < 0)
        codes = np.where(missing, -1, arr).astype(np.int64)
        if categories is None:
            n_cat = int(codes.max()) + 1 if codes.size else 0
            categories = tuple(str(c) for c in range(max(n_cat, 1)))
        if codes.size and codes.max() >= len(categories):
            raise ConsistencyError("category code exceeds the category list")
        if raters is None:
            raters = tuple(str(r) for r in range(arr.shape[1]))
        return cls(np.arange(arr.shape[0]), raters, categories, values=codes.astype(np.int8))

    @property
    def is_pixel(self) -> bool:
        return self._pixels is not None

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_raters(self) -> int:
        return len(self.raters)

    @cached_property
    def _values(self) -> np.ndarray:
        px = self._pixels
        vals = kernels.gather_bits(px.planes, self.units).T.copy()
        vals[:, ~px.participating] = MISSING
        return vals

    @property
    def values(self) -> np.ndarray:
        return self._values

    def without(self, rater_ids: Sequence[str] | str) -> "ObservationMatrix":
        """Same units, listed raters removed (leave-one-out)."""
        if isinstance(rater_ids, str):
            rater_ids = [rater_ids]
        drop = set(rater_ids)
        unknown = drop - set(self.raters)
        if unknown:
            raise ConsistencyError(f"unknown raters {sorted(unknown)}")
        keep = [i for i, r in enumerate(self.raters) if r not in drop]
        raters = [self.raters[i] for i in keep]
        if self._pixels is not None:
            px = self._pixels
            sub = _PixelPlanes(px.planes[keep], px.mask, px.participating[keep], px.shape, px.labels)
            return ObservationMatrix(self.units, raters, self.categories, seed=self.seed, drop_fraction=self.drop_fraction, _pixels=sub)
        return ObservationMatrix(
            self.units, raters, self.categories, values=self.values[:, keep], seed=self.seed, drop_fraction=self.drop_fraction
        )

    def __repr__(self):
        kind = "pixel" if self.is_pixel else "dense"
        return f"ObservationMatrix({kind}, units={self.n_units}, raters={list(self.raters)})"


def retained_units(n_units: int, drop_fraction: float, seed: int) -> np.ndarray:
    """Sorted indices kept after dropping ``drop_fraction`` of ``range(n_units)``.

    Exactly ``floor((1 - drop_fraction) * n_units + 0.5)`` units survive; the
    dropped ones are the prefix of a seeded partial Fisher-Yates shuffle.
    """
    if not 0.0 <= drop_fraction < 1.0:
        raise ValueError("drop_fraction must lie in [0, 1)")
    n_keep = int(np.floor((1.0 - drop_fraction) * n_units + 0.5))
    dropped = kernels.fisher_yates_prefix(n_units, n_units - n_keep, seed)
    keep = np.ones(n_units, dtype=bool)
    keep[dropped] = False
    return np.flatnonzero(keep)


def build_observation_matrix(
    stacks: Sequence[RasterStack],
    participation: Mapping[str, bool] | None = None,
    drop_fraction: float = DEFAULT_DROP_FRACTION,
    seed: int = 0,
) -> ObservationMatrix:
    """Flatten per-annotator raster stacks of one image into an observation matrix.

    Annotators mapped to ``False`` in ``participation`` (default: all
    ``True``) contribute missing values throughout.
    """
    if not stacks:
        raise ConsistencyError("no raster stacks given")
    if not 0.0 <= drop_fraction < 1.0:
        raise ConsistencyError("drop_fraction must lie in [0, 1)")
    first = stacks[0]
    for s in stacks[1:]:
        if s.shape != first.shape:
            raise ConsistencyError(f"stack {s.annotator_id!r} has shape {s.shape}, expected {first.shape}")
        if s.labels != first.labels:
            raise ConsistencyError(f"stack {s.annotator_id!r} uses a different vocabulary")
        if s.image_id != first.image_id:
            raise ConsistencyError("stacks belong to different images")
    participation = participation or {}
    raters = [s.annotator_id for s in stacks]
    n_total = int(np.prod(first.shape))
    units = retained_units(n_total, drop_fraction, seed)
    keep = np.zeros(n_total, dtype=bool)
    keep[units] = True
    planes = np.stack([kernels.pack_bits(s.channels.ravel()) for s in stacks])
    part = np.array([bool(participation.get(r, True)) for r in raters])
    planes[~part] = 0
    pixels = _PixelPlanes(planes, kernels.pack_bits(keep), part, first.shape, first.labels)
    return ObservationMatrix(units, raters, PIXEL_CATEGORIES, seed=seed, drop_fraction=drop_fraction, _pixels=pixels)


def restrict_to_class(matrix: ObservationMatrix, label: str) -> ObservationMatrix:
    """Keep only the units that lie in ``label``'s channel."""
    px = matrix._pixels
    if px is None:
        raise ConsistencyError("class restriction needs a pixel observation matrix")
    if label not in px.labels:
        raise VocabularyError(f"unknown class {label!r}; vocabulary is {list(px.labels)}")
    c = px.labels.index(label)
    plane = px.shape[1] * px.shape[2]
    lo, hi = c * plane, (c + 1) * plane
    units = matrix.units[(matrix.units >= lo) & (matrix.units < hi)]
    mask = px.mask & kernels.range_mask(len(px.mask), lo, hi)
    sub = _PixelPlanes(px.planes, mask, px.participating, px.shape, px.labels)
    return ObservationMatrix(units, matrix.raters, matrix.categories, seed=matrix.seed, drop_fraction=matrix.drop_fraction, _pixels=sub)
