import numpy as np
import pytest

from bboxqa.agreement import AgreementConfig, alpha_per_image
from bboxqa.curation import GroundTruthSet
from bboxqa.datamodel import merge_sets
from bboxqa.detect_eval import evaluate
from bboxqa.errors import ConfigError
from bboxqa.synth import NoiseProfile, SceneSpec, generate_truth, simulate_annotator, simulate_corpus, simulate_detector


def as_gt(truth):
    return GroundTruthSet(truth, {im.id: "truth" for im in truth.images}, "original")


def test_truth_counts_and_determinism():
    spec = SceneSpec(n_images=10, objects_per_image=5, seed=3)
    t = generate_truth(spec)
    assert len(t.boxes) == 50
    assert generate_truth(spec) == t
    assert generate_truth(SceneSpec(n_images=10, objects_per_image=5, seed=4)) != t
    for b in t.boxes:
        im = t.image(b.image_id)
        assert b.box.x1 <= im.width and b.box.y1 <= im.height


def test_class_mix_single_class():
    t = generate_truth(SceneSpec(n_images=3, class_mix={"person": 1.0}))
    assert {b.label for b in t.boxes} == {"person"}


def test_unsatisfiable_scene():
    with pytest.raises(ConfigError):
        SceneSpec(width=10, height=10, min_size=20, max_size=30)


def test_zero_noise_is_identity():
    t = generate_truth(SceneSpec(n_images=4, seed=1))
    a = simulate_annotator(t, NoiseProfile(), "A", seed=5)
    assert [(b.image_id, b.label, b.box) for b in a.boxes] == [(b.image_id, b.label, b.box) for b in t.boxes]
    assert {b.annotator_id for b in a.boxes} == {"A"}


def test_full_miss_leaves_only_spurious():
    t = generate_truth(SceneSpec(n_images=20, seed=1))
    a = simulate_annotator(t, NoiseProfile(p_miss=1.0), "A", seed=5)
    assert a.boxes == ()
    b = simulate_annotator(t, NoiseProfile(p_miss=1.0, p_spurious=2.0), "A", seed=5)
    assert len(b.boxes) > 0
    # all annotators stay participants even with no boxes
    assert all(a.participated(im.id, "A") for im in a.images)


def test_more_jitter_lowers_agreement():
    wins = 0
    cfg = AgreementConfig(drop_fraction=0.2, seed=0)
    for seed in range(100):
        t = generate_truth(SceneSpec(width=96, height=64, n_images=1, objects_per_image=4, seed=seed))
        alphas = []
        for sigma in (2.0, 20.0):
            noisy = simulate_annotator(t, NoiseProfile(jitter_sigma=sigma), "N", seed=seed)
            alphas.append(alpha_per_image(merge_sets([t, noisy]), cfg)[t.images[0].id].alpha)
        wins += alphas[1] < alphas[0]
    assert wins >= 95


def test_detector_miss_rate_sets_recall():
    recalls = []
    for seed in range(100):
        t = generate_truth(SceneSpec(n_images=5, objects_per_image=5, seed=seed))
        preds = simulate_detector(t, NoiseProfile(p_miss=0.4), seed=seed)
        recalls.append(evaluate(preds, as_gt(t)).overall.recall)
    assert abs(np.mean(recalls) - 0.6) <= 0.05


def test_zero_noise_detector_is_perfect():
    t = generate_truth(SceneSpec(n_images=5, seed=2))
    o = evaluate(simulate_detector(t, NoiseProfile(), seed=2), as_gt(t)).overall
    assert o.precision == o.recall == o.f1 == 1.0


def test_confusion_rate_shows_as_misclassification():
    swap = {"person": {"bicycle": 0.3, "person": 0.7}, "bicycle": {"person": 0.3, "bicycle": 0.7}}
    mis = cand = 0
    for seed in range(50):
        t = generate_truth(SceneSpec(n_images=5, objects_per_image=4, class_mix={"person": 1.0, "bicycle": 1.0}, seed=seed))
        r = evaluate(simulate_detector(t, NoiseProfile(confusion=swap), seed=seed), as_gt(t))
        mis += r.overall.misclassified
        cand += len(t.boxes)
    # overlapping truth boxes can absorb a few swaps, hence the tolerance
    assert abs(mis / cand - 0.3) <= 0.05


def test_detector_scores_drop_with_noise():
    t = generate_truth(SceneSpec(n_images=10, seed=3))
    clean = simulate_detector(t, NoiseProfile(), seed=1)
    noisy = simulate_detector(t, NoiseProfile(jitter_sigma=8.0), seed=1)
    assert np.mean([b.score for b in noisy.boxes]) < np.mean([b.score for b in clean.boxes])
    assert all(0.0 <= b.score <= 1.0 for b in noisy.boxes)


def test_corpus_is_deterministic():
    t = generate_truth(SceneSpec(n_images=3, seed=9))
    profiles = {"A": NoiseProfile(jitter_sigma=2.0), "B": NoiseProfile(p_miss=0.2)}
    c1, c2 = simulate_corpus(t, profiles, 4), simulate_corpus(t, profiles, 4)
    assert c1 == c2 and c1.annotator_ids == ("A", "B")


def test_bad_profiles():
    with pytest.raises(ConfigError):
        NoiseProfile(p_miss=1.5)
    with pytest.raises(ConfigError):
        NoiseProfile(confusion={"person": {"bicycle": 0.5}})
    t = generate_truth(SceneSpec(n_images=1))
    with pytest.raises(ConfigError):
        simulate_annotator(t, NoiseProfile(confusion={"car": {"car": 1.0}}), "A", seed=0)
