"""Quality assurance for multi-annotator bounding-box datasets.

Pixel-level Krippendorff's alpha, leave-one-out rater vitality, class
difficulty, ground-truth curation and detector evaluation.
"""

__version__ = "0.1.0"

from .agreement import AgreementConfig, AlphaResult, alpha_per_image, krippendorff_alpha, brute_force_alpha
from .curation import GroundTruthSet, build_gt_mixed, build_gt_single, drop_annotator, import_original_gt
from .datamodel import AnnotationSet, Annotator, Box, ImageRef, LabeledBox, LabelMap, parse_annotation_set, validate
from .detect_eval import EvalConfig, evaluate, iou, labeled_iou, match_detections
from .errors import BBoxQAError
from .quality import class_difficulty, rank_annotators, top_annotators, vitality, vitality_reports
from .raster import ObservationMatrix, build_observation_matrix, rasterize
from .synth import NoiseProfile, SceneSpec, generate_truth, simulate_annotator, simulate_corpus, simulate_detector

__all__ = [
    "AgreementConfig",
    "alpha_per_image",
    "AlphaResult",
    "AnnotationSet",
    "Annotator",
    "BBoxQAError",
    "Box",
    "brute_force_alpha",
    "build_gt_mixed",
    "build_gt_single",
    "build_observation_matrix",
    "class_difficulty",
    "drop_annotator",
    "EvalConfig",
    "evaluate",
    "generate_truth",
    "GroundTruthSet",
    "ImageRef",
    "import_original_gt",
    "iou",
    "krippendorff_alpha",
    "labeled_iou",
    "LabeledBox",
    "LabelMap",
    "match_detections",
    "NoiseProfile",
    "ObservationMatrix",
    "parse_annotation_set",
    "rank_annotators",
    "rasterize",
    "SceneSpec",
    "simulate_annotator",
    "simulate_corpus",
    "simulate_detector",
    "top_annotators",
    "validate",
    "vitality",
    "vitality_reports",
]
