from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bboxqa.curation import GroundTruthSet
from bboxqa.datamodel import Box, LabeledBox
from bboxqa.detect_eval import EvalConfig, Metrics, cap_predictions, evaluate, iou, iou_counts, labeled_iou, match_detections
from bboxqa.errors import ConfigError, EvaluationError

from conftest import make_set
from oracles import raster_iou


def lb(label, x, y, w, h, score=None, image="im", ann="det"):
    return LabeledBox(image, ann, label, Box(x, y, w, h), score)


def gt_of(rows, images=("im",)):
    s = make_set([(r[0], "gt", *r[1:]) for r in rows], images=list(images), annotators=["gt"])
    return GroundTruthSet(s, {i: "gt" for i in images}, "original")


def test_iou_examples():
    a, b = Box(0, 0, 10, 10), Box(5, 5, 10, 10)
    assert iou_counts(a, b) == (25, 175)
    assert iou(a, b) == 25 / 175
    assert Fraction(*iou_counts(a, b)) == raster_iou((0, 0, 10, 10), (5, 5, 10, 10))
    assert iou(a, a) == 1.0
    assert iou(a, Box(20, 20, 5, 5)) == 0.0
    assert iou(a, Box(10, 0, 5, 5)) == 0.0  # touching edges share no pixel


def test_labeled_iou():
    assert labeled_iou(lb("person", 0, 0, 5, 5), lb("person", 0, 0, 5, 5)) == 1.0
    assert labeled_iou(lb("person", 0, 0, 5, 5), lb("vehicle", 0, 0, 5, 5)) == 0.0
    assert labeled_iou(lb("person", 0, 0, 5, 5), lb("person", 10, 10, 5, 5)) == 0.0


box_st = st.tuples(st.integers(0, 40), st.integers(0, 40), st.integers(1, 24), st.integers(1, 24))


@settings(max_examples=300, deadline=None)
@given(box_st, box_st)
def test_iou_matches_raster_and_is_symmetric(a, b):
    ba, bb = Box(*a), Box(*b)
    assert Fraction(*iou_counts(ba, bb)) == raster_iou(a, b)
    assert iou(ba, bb) == iou(bb, ba)


def test_cap_global_and_per_image():
    preds = [lb("person", i % 50, 0, 5, 5, score=(i * 7919 % 1000) / 1000) for i in range(1000)]
    kept = cap_predictions(preds, EvalConfig(cap=380))
    assert len(kept) == 380
    assert min(p.score for p in kept) >= max(p.score for p in preds if p not in kept)
    assert cap_predictions(preds[:10], EvalConfig(cap=20)) == preds[:10]
    few = [lb("person", 0, 0, 5, 5, 0.5, image="a") for _ in range(3)] + [lb("person", 0, 0, 5, 5, 0.1 * k, image="b") for k in range(8)]
    per = cap_predictions(few, EvalConfig(cap=5, cap_scope="per_image"))
    assert sum(p.image_id == "a" for p in per) == 3 and sum(p.image_id == "b" for p in per) == 5


def test_cap_requires_scores():
    with pytest.raises(EvaluationError):
        cap_predictions([lb("person", 0, 0, 5, 5)], EvalConfig())


def test_exact_match():
    r = evaluate([lb("person", 0, 0, 10, 10, 0.9)], gt_of([("im", "person", 0, 0, 10, 10)]))
    o = r.overall
    assert (o.tp, o.fp, o.fn, o.misclassified) == (1, 0, 0, 0)


def test_label_mismatch_is_misclassification():
    r = evaluate([lb("vehicle", 0, 0, 10, 10, 0.9)], gt_of([("im", "person", 0, 0, 10, 10)]))
    o = r.overall
    assert (o.tp, o.fp, o.fn, o.misclassified) == (0, 1, 1, 1)
    assert r.per_class["vehicle"].misclassified == 1 and r.per_class["person"].fn == 1


def test_one_to_one():
    preds = [lb("person", 0, 0, 10, 10, 0.9), lb("person", 1, 0, 10, 10, 0.5)]
    r = evaluate(preds, gt_of([("im", "person", 0, 0, 10, 10)]))
    assert (r.overall.tp, r.overall.fp) == (1, 1)
    m = r.matches.per_image["im"]
    assert m.matched[0].prediction.score == 0.9 and m.unmatched_predictions[0].score == 0.5


def test_threshold_is_inclusive():
    # IoU exactly 0.5: 10x10 vs 10x20 sharing 100 pixels -> 100/200
    r = evaluate([lb("person", 0, 0, 10, 20, 0.9)], gt_of([("im", "person", 0, 0, 10, 10)]), EvalConfig(iou_threshold=0.5))
    assert r.overall.tp == 1
    r = evaluate([lb("person", 0, 0, 10, 20, 0.9)], gt_of([("im", "person", 0, 0, 10, 10)]), EvalConfig(iou_threshold=0.51))
    assert r.overall.tp == 0


def test_metric_formulas():
    m = Metrics.from_counts(3, 1, 2)
    assert m.precision == 0.75 and m.recall == 0.6
    assert abs(m.f1 - 2 * 0.75 * 0.6 / 1.35) < 1e-12
    assert Metrics.from_counts(1, 1, 1).f1 == 0.5
    empty = Metrics.from_counts(0, 0, 4)
    assert empty.precision_undefined and empty.precision == 0.0 and empty.recall == 0.0 and empty.f1 == 0.0
    assert empty.to_dict()["precision_undefined"] is True


def test_unknown_image_or_label():
    gt = gt_of([("im", "person", 0, 0, 10, 10)])
    with pytest.raises(EvaluationError):
        evaluate([lb("person", 0, 0, 5, 5, 0.5, image="zz")], gt)
    with pytest.raises(EvaluationError):
        evaluate([lb("car", 0, 0, 5, 5, 0.5)], gt)


def test_config_validation():
    for bad in ({"iou_threshold": 0.0}, {"cap": 0}, {"cap_scope": "x"}, {"average": "x"}):
        with pytest.raises(ConfigError):
            EvalConfig(**bad)


def test_macro_average():
    gt = gt_of([("im", "person", 0, 0, 10, 10), ("im", "vehicle", 50, 50, 10, 10), ("im", "vehicle", 70, 70, 10, 10)])
    preds = [lb("person", 0, 0, 10, 10, 0.9), lb("vehicle", 50, 50, 10, 10, 0.8)]
    micro = evaluate(preds, gt).overall
    macro = evaluate(preds, gt, EvalConfig(average="macro")).overall
    assert micro.recall == 2 / 3
    assert macro.recall == (1.0 + 0.5) / 2


labels = st.sampled_from(["person", "vehicle"])
det = st.tuples(labels, st.integers(0, 40), st.integers(0, 40), st.integers(4, 20), st.integers(4, 20), st.floats(0, 1))


@settings(max_examples=200, deadline=None)
@given(st.lists(det, max_size=10), st.lists(st.tuples(labels, st.integers(0, 40), st.integers(0, 40), st.integers(4, 20), st.integers(4, 20)), max_size=10), st.sampled_from([0.3, 0.5, 0.7]))
def test_count_conservation(preds, gts, tau):
    gt = gt_of([("im", *g) for g in gts])
    report = evaluate([lb(*p) for p in preds], gt, EvalConfig(iou_threshold=tau))
    o = report.overall
    assert o.tp + o.fn == len(gts)
    assert o.tp + o.fp == len(preds)
    assert o.misclassified <= o.fp
    if o.precision + o.recall > 0:
        assert min(o.precision, o.recall) - 1e-12 <= o.f1 <= max(o.precision, o.recall) + 1e-12
    for label, m in report.per_class.items():
        assert m.tp + m.fn == sum(g[0] == label for g in gts)
        assert m.tp + m.fp == sum(p[0] == label for p in preds)


@settings(max_examples=50, deadline=None)
@given(st.lists(det, min_size=1, max_size=15), st.integers(1, 15))
def test_cap_monotone(preds, cap):
    gt = gt_of([("im", "person", 10, 10, 15, 15), ("im", "vehicle", 30, 30, 10, 10)])
    boxes = [lb(*p) for p in preds]
    small = evaluate(boxes, gt, EvalConfig(cap=cap))
    big = evaluate(boxes, gt, EvalConfig(cap=cap + 1))
    assert small.overall.tp <= big.overall.tp
    assert small.overall.tp + small.overall.fp == min(cap, len(preds))


def test_image_without_predictions_counts_false_negatives():
    gt = gt_of([("a", "person", 0, 0, 10, 10), ("b", "person", 0, 0, 10, 10)], images=("a", "b"))
    r = match_detections([lb("person", 0, 0, 10, 10, 0.5, image="a")], gt)
    assert len(r.per_image["b"].unmatched_gts) == 1
