"""Report documents and their JSON/CSV renderings.

Each builder returns a plain dict with a fixed key order; ``render`` turns it
into bytes deterministically (no timestamps, fixed float repr).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Mapping, Sequence

from .agreement import AgreementConfig, classify_alpha
from .curation import GroundTruthSet
from .datamodel import ValidationReport, serialize_annotation_set
from .detect_eval import EvalReport
from .quality import ClassDifficultyReport, RankEntry, VitalityReport, hardest_class

REPORT_KINDS = ("validation", "agreement", "vitality", "difficulty", "ground_truth", "eval")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def validation_doc(report: ValidationReport) -> dict:
    return report.to_dict()


def vitality_doc(reports: Mapping[str, VitalityReport], ranking: Sequence[RankEntry], config: AgreementConfig) -> dict:
    return {
        "annotators": [reports[e.annotator_id].to_dict() for e in sorted(ranking, key=lambda e: e.annotator_id)],
        "ranking": [{"annotator_id": e.annotator_id, "mean_V": e.mean_V, "tied": e.tied} for e in ranking],
        "config": config.to_dict(),
    }


def difficulty_doc(reports: Sequence[ClassDifficultyReport], config: AgreementConfig) -> dict:
    return {
        "classes": [r.to_dict() for r in reports],
        "hardest": hardest_class(reports),
        "config": config.to_dict(),
    }


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(kind: str, doc: dict) -> str:
    """Flat table for spreadsheets; columns are fixed per report kind."""
    if kind == "validation":
        rows = [("coverage", a, _fmt(v)) for a, v in doc["coverage"].items()]
        rows += [("class_count", c, _fmt(n)) for c, n in doc["class_counts"].items()]
        rows += [
            ("duplicate", f"{d['image_id']}/{d['annotator_id']}/{d['label']}/{d['bbox']}", _fmt(d["count"])) for d in doc["duplicates"]
        ]
        rows += [("warning", w, "") for w in doc["warnings"]]
        return _csv(("section", "key", "value"), rows)
    if kind == "agreement":
        rows = [
            (r["image_id"], _fmt(r["alpha"]), _fmt(r["units"]), _fmt(r["raters"]), _fmt(r["degenerate"])) for r in doc["per_image"]
        ]
        rows.append(("__mean__", _fmt(doc["mean"]), "", "", ""))
        rows.append(("__median__", _fmt(doc["median"]), "", "", ""))
        return _csv(("image_id", "alpha", "units", "raters", "degenerate"), rows)
    if kind == "vitality":
        rows = [
            (a["annotator_id"], _fmt(a["mean_V"]), _fmt(a["median_V"]), _fmt(a["k_full_mean"]), _fmt(a["k_loo_mean"]))
            for a in doc["annotators"]
        ]
        return _csv(("annotator_id", "mean_V", "median_V", "k_full_mean", "k_loo_mean"), rows)
    if kind == "difficulty":
        annotators = sorted({a for c in doc["classes"] for a in c["per_annotator_vitality"]})
        rows = [
            (c["class"], _fmt(c["mean_class_alpha"]), _fmt(c["median_class_alpha"]), *(_fmt(c["per_annotator_vitality"].get(a)) for a in annotators))
            for c in doc["classes"]
        ]
        return _csv(("class", "mean_alpha", "median_alpha", *(f"V_{a}" for a in annotators)), rows)
    if kind == "eval":
        cols = ("tp", "fp", "fn", "precision", "recall", "f1", "misclassified")
        rows = [("overall", *(_fmt(doc["overall"][c]) for c in cols))]
        rows += [(label, *(_fmt(m[c]) for c in cols)) for label, m in doc.get("per_class", {}).items()]
        return _csv(("scope", *cols), rows)
    raise ValueError(f"no CSV layout for {kind!r}")


def render(kind: str, doc, fmt: str = "json") -> str:
    """Serialise a report; ``doc`` is a dict, or a ``GroundTruthSet`` for kind ``ground_truth``."""
    if kind == "ground_truth":
        gt: GroundTruthSet = doc
        return serialize_annotation_set(gt.base, "csv") if fmt == "csv" else dumps(gt.to_dict())
    if fmt == "csv":
        return to_csv(kind, doc)
    return dumps(doc)


def eval_doc(report: EvalReport) -> dict:
    return report.to_dict()


def summarize(docs: Mapping[str, dict]) -> str:
    """Human-readable digest of whichever JSON reports are present."""
    lines = []
    if "validation" in docs:
        v = docs["validation"]
        lines.append("Validation")
        for a, cov in v["coverage"].items():
            lines.append(f"  {a:<16} coverage {cov:.3f}")
        lines.append(f"  duplicates: {len(v['duplicates'])}, warnings: {len(v['warnings'])}")
    if "agreement" in docs:
        a = docs["agreement"]
        scored = [r for r in a["per_image"] if r["alpha"] is not None]
        lines.append("Agreement (Krippendorff's alpha)")
        lines.append(f"  images scored {len(scored)} / {len(a['per_image'])}")
        lines.append(f"  mean {a['mean']:.3f}  median {a['median']:.3f}  band {a['band']}")
    if "vitality" in docs:
        lines.append("Rater vitality (descending)")
        for e in docs["vitality"]["ranking"]:
            effect = "raises" if e["mean_V"] > 0 else "lowers" if e["mean_V"] < 0 else "does not change"
            tie = " (tied)" if e["tied"] else ""
            lines.append(f"  {e['annotator_id']:<16} {e['mean_V']:+.4f}  {effect} consensus{tie}")
    if "difficulty" in docs:
        d = docs["difficulty"]
        lines.append("Class recognition difficulty")
        for c in d["classes"]:
            band = classify_alpha(c["mean_class_alpha"]).value
            flag = " (degenerate)" if c["degenerate"] else ""
            lines.append(f"  {c['class']:<16} mean alpha {c['mean_class_alpha']:.3f}  {band}{flag}")
        lines.append(f"  hardest class: {d['hardest']}")
    if "ground_truth" in docs:
        g = docs["ground_truth"]
        lines.append(f"Ground truth: recipe {g['recipe']}, {len(g['images'])} images, {len(g['boxes'])} boxes")
    if "eval" in docs:
        o = docs["eval"]["overall"]
        lines.append("Detector evaluation")
        lines.append(
            f"  P {o['precision']:.3f}  R {o['recall']:.3f}  F1 {o['f1']:.3f}  "
            f"TP {o['tp']} FP {o['fp']} FN {o['fn']} misclassified {o['misclassified']}"
        )
    return "\n".join(lines) + "\n"
