import numpy as np
import pytest
from scipy import stats

from bboxqa.agreement import krippendorff_alpha
from bboxqa.datamodel import Box, ImageRef, LabeledBox
from bboxqa.errors import ConsistencyError, VocabularyError
from bboxqa.raster import build_observation_matrix, rasterize, restrict_to_class, retained_units, write_pgm

from conftest import LABELS

IMG = ImageRef("im", 100, 100)


def box(label, x, y, w, h, ann="A", image="im"):
    return LabeledBox(image, ann, label, Box(x, y, w, h))


def test_single_box_fills_its_channel():
    r = rasterize(IMG, [box("person", 10, 10, 10, 10)], LABELS)
    assert r.labeled_pixel_count == (100, 0, 0)


def test_overlapping_boxes_union():
    r = rasterize(IMG, [box("person", 0, 0, 10, 10), box("person", 5, 0, 10, 10)], LABELS)
    assert r.labeled_pixel_count[0] == 150


def test_no_boxes_empty():
    r = rasterize(IMG, [], LABELS, annotator_id="A")
    assert r.labeled_pixel_count == (0, 0, 0)


def test_unknown_label():
    with pytest.raises(VocabularyError):
        rasterize(IMG, [box("car", 0, 0, 5, 5)], LABELS)


def test_pgm_dump(tmp_path):
    r = rasterize(IMG, [box("person", 0, 0, 5, 5)], LABELS)
    paths = write_pgm(r, tmp_path / "dbg")
    assert len(paths) == 3
    data = paths[0].read_bytes()
    assert data.startswith(b"P5\n100 100\n255\n") and data.count(b"\xff") == 25


def test_identical_stacks_never_disagree():
    boxes = [box("person", 3, 4, 20, 30), box("bicycle", 50, 50, 10, 10)]
    a = rasterize(IMG, boxes, LABELS)
    b = rasterize(IMG, [LabeledBox(x.image_id, "B", x.label, x.box) for x in boxes], LABELS)
    m = build_observation_matrix([a, b], drop_fraction=0.0)
    v = m.values
    assert m.n_units == 3 * 100 * 100
    assert np.all(v[:, 0] == v[:, 1])


def test_mismatched_stacks():
    a = rasterize(IMG, [], LABELS, "A")
    b = rasterize(ImageRef("im", 50, 100), [], LABELS, "B")
    with pytest.raises(ConsistencyError):
        build_observation_matrix([a, b])
    c = rasterize(IMG, [], LABELS[:2], "C")
    with pytest.raises(ConsistencyError):
        build_observation_matrix([a, c])


def test_full_size_unit_count_and_determinism():
    img = ImageRef("big", 1200, 800)
    stacks = [rasterize(img, [], LABELS, a) for a in "AB"]
    m1 = build_observation_matrix(stacks, drop_fraction=0.2, seed=11)
    m2 = build_observation_matrix(stacks, drop_fraction=0.2, seed=11)
    assert m1.n_units == 2_304_000
    assert 1200 * 800 * 3 == 2_880_000
    assert m1.units.tobytes() == m2.units.tobytes()
    assert not np.array_equal(m1.units, build_observation_matrix(stacks, drop_fraction=0.2, seed=12).units)


@pytest.mark.parametrize("n, f", [(10, 0.2), (7, 0.5), (5, 0.1), (3, 0.0), (1000, 0.33)])
def test_retained_count_rounds_half_up(n, f):
    assert len(retained_units(n, f, 0)) == int(np.floor((1 - f) * n + 0.5))


def test_drop_is_unbiased_per_unit():
    n, f, seeds = 50, 0.2, 1000
    dropped = np.zeros(n)
    for s in range(seeds):
        keep = np.zeros(n, dtype=bool)
        keep[retained_units(n, f, s)] = True
        dropped += ~keep
    sigma = np.sqrt(seeds * f * (1 - f))
    assert np.all(np.abs(dropped - seeds * f) <= 4 * sigma)
    assert stats.chisquare(dropped).pvalue > 0.001


def _matrix():
    a = rasterize(IMG, [box("person", 0, 0, 40, 40), box("vehicle", 60, 60, 20, 20)], LABELS, "A")
    b = rasterize(IMG, [box("person", 5, 5, 40, 40, "B")], LABELS, "B")
    return build_observation_matrix([a, b], drop_fraction=0.2, seed=3)


def test_restrict_partitions_units():
    m = _matrix()
    parts = [restrict_to_class(m, c) for c in LABELS]
    assert sum(p.n_units for p in parts) == m.n_units
    assert np.array_equal(np.sort(np.concatenate([p.units for p in parts])), m.units)
    for p in parts:
        assert abs(p.n_units - m.n_units / 3) < 0.02 * m.n_units


def test_restrict_idempotent():
    m = _matrix()
    once = restrict_to_class(m, "person")
    twice = restrict_to_class(once, "person")
    assert np.array_equal(once.units, twice.units)
    assert np.array_equal(once.values, twice.values)
    assert krippendorff_alpha(once).alpha == krippendorff_alpha(twice).alpha


def test_restrict_to_empty_class():
    m = restrict_to_class(_matrix(), "bicycle")
    assert np.all(m.values == 0)
    assert krippendorff_alpha(m).degenerate


def test_restrict_unknown_class():
    with pytest.raises(VocabularyError):
        restrict_to_class(_matrix(), "car")


def test_non_participant_is_missing():
    a = rasterize(IMG, [box("person", 0, 0, 10, 10)], LABELS, "A")
    b = rasterize(IMG, [], LABELS, "B")
    m = build_observation_matrix([a, b], {"B": False}, drop_fraction=0.0)
    assert np.all(m.values[:, 1] == -1)
