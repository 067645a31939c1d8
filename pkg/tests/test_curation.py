import json
from collections import Counter

import pytest
from scipy import stats

from bboxqa.curation import (
    GroundTruthSet,
    build_gt_mixed,
    build_gt_single,
    drop_annotator,
    ground_truth_to_json,
    import_original_gt,
    parse_ground_truth,
)
from bboxqa.datamodel import LabelMap, serialize_annotation_set
from bboxqa.errors import CoverageError, ReferentialError, VocabularyError

from conftest import LABELS, make_set

IMAGES = [f"im{i:03d}" for i in range(100)]


def four_annotators(images=IMAGES):
    rows = [(i, a, "person", k, k, 10, 10) for i in images for k, a in enumerate(["1", "2", "3", "4"])]
    return make_set(rows, images=images)


def test_drop_annotator():
    out = drop_annotator(four_annotators(IMAGES[:5]), "1")
    assert {b.annotator_id for b in out.boxes} == {"2", "3", "4"}
    assert len(out.images) == 5


def test_drop_annotator_without_boxes_keeps_boxes():
    s = make_set([("im", "A", "person", 0, 0, 5, 5)], annotators=["A", "B"])
    assert drop_annotator(s, "B").boxes == s.boxes


def test_drop_twice_is_idempotent_and_unknown_raises():
    s = four_annotators(IMAGES[:3])
    once = drop_annotator(s, "1")
    assert drop_annotator(once, "1") == once
    with pytest.raises(ReferentialError):
        drop_annotator(s, "nobody")


def test_mixed_provenance_and_determinism():
    s = four_annotators()
    gt = build_gt_mixed(s, ["2", "3", "4"], seed=9)
    assert set(gt.provenance.values()) <= {"2", "3", "4"}
    assert all(b.annotator_id == gt.provenance[b.image_id] for b in gt.base.boxes)
    assert len(gt.base.boxes) == 100
    assert build_gt_mixed(s, ["2", "3", "4"], seed=9).provenance == gt.provenance


def test_mixed_uniform_over_seeds():
    s = four_annotators()
    counts = Counter()
    for seed in range(1000):
        counts.update(build_gt_mixed(s, ["2", "3", "4"], seed=seed).provenance.values())
    assert stats.chisquare([counts[a] for a in "234"]).pvalue > 0.001


def test_mixed_single_top_degenerates():
    gt = build_gt_mixed(four_annotators(IMAGES[:10]), ["2"], seed=1)
    assert set(gt.provenance.values()) == {"2"}


def test_mixed_coverage_hole():
    rows = [("a", "1", "person", 0, 0, 5, 5), ("b", "2", "person", 0, 0, 5, 5), ("c", "1", "person", 0, 0, 5, 5)]
    with pytest.raises(CoverageError) as info:
        build_gt_mixed(make_set(rows), ["2"], seed=0)
    assert info.value.images == ["a", "c"]


def test_single_constant_provenance():
    s = four_annotators(IMAGES[:20])
    drawn = set()
    for seed in range(30):
        gt = build_gt_single(s, ["2", "3", "4"], seed=seed)
        assert len(set(gt.provenance.values())) == 1
        drawn |= set(gt.provenance.values())
    assert drawn == {"2", "3", "4"}
    assert set(build_gt_single(s, ["3"], seed=5).provenance.values()) == {"3"}


def test_single_coverage_hole_has_no_fallback():
    rows = [("a", "2", "person", 0, 0, 5, 5), ("b", "3", "person", 0, 0, 5, 5)]
    with pytest.raises(CoverageError) as info:
        build_gt_single(make_set(rows), ["2"], seed=0)
    assert info.value.images == ["b"]
    assert info.value.exit_code == 3


def test_ground_truth_json_roundtrip():
    gt = build_gt_mixed(four_annotators(IMAGES[:5]), ["2", "3"], seed=3)
    again = parse_ground_truth(ground_truth_to_json(gt))
    assert again.provenance == gt.provenance and again.base == gt.base and again.recipe == "mixed_top" and again.seed == 3


def test_import_original_with_rename():
    labels = LABELS + ("biker",)
    original = make_set([("im", "released", "biker", 0, 0, 5, 5), ("im", "released", "person", 5, 5, 5, 5)], labels=labels)
    gt = import_original_gt(serialize_annotation_set(original), LabelMap(rename={"biker": "bicycle"}))
    assert isinstance(gt, GroundTruthSet) and gt.recipe == "original"
    assert [b.label for b in gt.base.boxes] == ["bicycle", "person"]
    assert {b.annotator_id for b in gt.base.boxes} == {"original"}


def test_import_original_passthrough_and_unknown_label():
    original = make_set([("im", "released", "person", 0, 0, 5, 5)])
    gt = import_original_gt(original)
    assert [(b.label, b.box) for b in gt.base.boxes] == [(b.label, b.box) for b in original.boxes]
    doc = json.loads(serialize_annotation_set(original))
    doc["boxes"][0]["label"] = "biker"
    with pytest.raises(VocabularyError):
        import_original_gt(json.dumps(doc))
