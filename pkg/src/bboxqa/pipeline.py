"""Config-driven pipeline: validate, agreement, vitality, difficulty, curate, eval.

Each stage writes its report as soon as it finishes, so a failure leaves the
earlier reports on disk next to a ``failed_stage.json`` marker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import reports
from .agreement import AgreementConfig, agreement_report, alpha_per_image
from .curation import build_gt_mixed, build_gt_single, import_original_gt, parse_ground_truth
from .datamodel import FORMATS, AnnotationSet, LabelMap, parse_annotation_set, validate
from .detect_eval import EvalConfig, evaluate
from .errors import BBoxQAError, ConfigError
from .quality import class_difficulty, rank_annotators, top_annotators, vitality_reports

STAGES = ("validate", "agreement", "vitality", "difficulty", "curate", "eval")
STAGE_REPORT = {
    "validate": "validation",
    "agreement": "agreement",
    "vitality": "vitality",
    "difficulty": "difficulty",
    "curate": "ground_truth",
    "eval": "eval",
}
GT_RECIPES = ("mixed_top", "single_top", "original")
OUTPUT_FORMATS = ("json", "csv")
FAILED_MARKER = "failed_stage.json"


def infer_format(path: Path, declared: str | None = None) -> str:
    if declared is not None:
        if declared not in FORMATS:
            raise ConfigError(f"input format must be one of {FORMATS}")
        return declared
    return "csv" if path.suffix.lower() == ".csv" else "canonical-json"


def read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def load_label_map(path: Path | None) -> LabelMap | None:
    if path is None:
        return None
    return LabelMap.from_json(read_bytes(path))


def load_annotations(
    path: Path, format: str | None = None, header: Path | None = None, label_map: LabelMap | None = None
) -> AnnotationSet:
    """Read an annotation file; CSV needs a canonical-JSON ``header`` describing images and labels."""
    fmt = infer_format(path, format)
    head = None
    if fmt == "csv":
        if header is None:
            raise ConfigError(f"CSV input {path} needs a header file with images and labels")
        head = json.loads(read_bytes(header))
    return parse_annotation_set(read_bytes(path), fmt, label_map=label_map, header=head)


@dataclass(frozen=True)
class RunConfig:
    annotations: Path
    seed: int
    out: Path
    input_format: str | None = None
    header: Path | None = None
    predictions: Path | None = None
    predictions_format: str | None = None
    original_gt: Path | None = None
    ground_truth: Path | None = None
    label_map: Path | None = None
    drop_fraction: float = 0.2
    iou_threshold: float = 0.5
    cap: int | None = None
    cap_scope: str = "global"
    average: str = "micro"
    top_k: int | None = None
    min_vitality: float | None = None
    gt_recipe: str = "mixed_top"
    format: str = "json"
    stages: tuple[str, ...] = STAGES

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer; there is no default")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {OUTPUT_FORMATS}")
        if self.gt_recipe not in GT_RECIPES:
            raise ConfigError(f"gt_recipe must be one of {GT_RECIPES}")
        object.__setattr__(self, "stages", tuple(self.stages))
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ConfigError(f"unknown stages {unknown}; choose from {STAGES}")
        if "eval" in self.stages and self.predictions is None:
            raise ConfigError("the eval stage needs a predictions file")
        if self.gt_recipe == "original" and "curate" in self.stages and self.original_gt is None:
            raise ConfigError("recipe 'original' needs an original_gt file")
        # validate numeric ranges early so a bad value fails before any work
        self.agreement_config()
        self.eval_config()

    def agreement_config(self) -> AgreementConfig:
        return AgreementConfig(drop_fraction=self.drop_fraction, seed=self.seed)

    def eval_config(self) -> EvalConfig:
        return EvalConfig(self.iou_threshold, self.cap, self.cap_scope, True, self.average)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], base_dir: Path | None = None) -> "RunConfig":
        """Build from a parsed config file; relative paths resolve against ``base_dir``."""
        if not isinstance(doc, Mapping):
            raise ConfigError("run config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown config keys {extra}")
        for key in ("annotations", "seed", "out"):
            if key not in doc:
                raise ConfigError(f"run config is missing {key!r}")
        base_dir = base_dir or Path(".")
        values = dict(doc)
        for key in ("annotations", "out", "header", "predictions", "original_gt", "ground_truth", "label_map"):
            if values.get(key) is not None:
                values[key] = base_dir / values[key]
        return cls(**values)

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        try:
            doc = json.loads(read_bytes(path))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc.msg} at line {exc.lineno}") from None
        return cls.from_dict(doc, path.parent)


@dataclass
class ReportBundle:
    out: Path
    written: dict[str, Path] = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None
    exit_code: int = 0


def write_report(out: Path, kind: str, doc, fmt: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{kind}.{fmt}"
    path.write_text(reports.render(kind, doc, fmt), encoding="utf-8", newline="\n")
    return path


def curate_ground_truth(s: AnnotationSet, recipe: str, top: Sequence[str], seed: int, original=None, label_map=None):
    if recipe == "mixed_top":
        return build_gt_mixed(s, top, seed=seed)
    if recipe == "single_top":
        return build_gt_single(s, top, seed=seed)
    return import_original_gt(original, label_map, s.labels)


def run_pipeline(config: RunConfig) -> ReportBundle:
    """Run the requested stages in order, stopping at the first error."""
    bundle = ReportBundle(config.out)
    stale = config.out / FAILED_MARKER
    if stale.exists():
        stale.unlink()
    state: dict[str, Any] = {}
    agree_cfg = config.agreement_config()
    stage = "load"
    try:
        label_map = load_label_map(config.label_map)
        s = load_annotations(config.annotations, config.input_format, config.header, label_map)
        for stage in STAGES:
            needed = stage in config.stages or (stage == "vitality" and _needs_ranking(config))
            if not needed:
                continue
            doc = _run_stage(stage, s, config, agree_cfg, label_map, state)
            if stage in config.stages:
                kind = STAGE_REPORT[stage]
                bundle.written[kind] = write_report(config.out, kind, doc, config.format)
    except BBoxQAError as exc:
        bundle.failed_stage = stage
        bundle.error = str(exc)
        bundle.exit_code = exc.exit_code
        config.out.mkdir(parents=True, exist_ok=True)
        marker = {
            "failed_stage": stage,
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exc.exit_code,
            "completed": sorted(bundle.written),
        }
        stale.write_text(reports.dumps(marker), encoding="utf-8", newline="\n")
    return bundle


def _needs_ranking(config: RunConfig) -> bool:
    return "curate" in config.stages and config.gt_recipe != "original"


def _run_stage(stage: str, s: AnnotationSet, config: RunConfig, agree_cfg: AgreementConfig, label_map, state: dict):
    if stage == "validate":
        return reports.validation_doc(validate(s))
    if stage == "agreement":
        return agreement_report(alpha_per_image(s, agree_cfg), agree_cfg)
    if stage == "vitality":
        vit = vitality_reports(s, agree_cfg)
        state["ranking"] = rank_annotators(vit.values())
        return reports.vitality_doc(vit, state["ranking"], agree_cfg)
    if stage == "difficulty":
        return reports.difficulty_doc([class_difficulty(s, c, agree_cfg) for c in s.labels], agree_cfg)
    if stage == "curate":
        top: list[str] = []
        if config.gt_recipe != "original":
            top_k = config.top_k if config.top_k is not None or config.min_vitality is not None else 3
            top = top_annotators(state["ranking"], top_k, config.min_vitality)
        original = None
        if config.original_gt is not None:
            original = load_annotations(config.original_gt)
        state["gt"] = curate_ground_truth(s, config.gt_recipe, top, config.seed, original, label_map)
        return state["gt"]
    if stage == "eval":
        gt = state.get("gt")
        if gt is None:
            if config.ground_truth is None:
                raise ConfigError("eval without the curate stage needs a ground_truth file")
            gt = parse_ground_truth(read_bytes(config.ground_truth))
        preds = load_annotations(config.predictions, config.predictions_format, config.header, label_map)
        return reports.eval_doc(evaluate(preds, gt, config.eval_config()))
    raise ConfigError(f"unknown stage {stage!r}")  # pragma: no cover
