"""``bboxqa`` command line.

Exit codes: 0 success, 1 parse/validation, 2 insufficient data, 3 curation,
4 evaluation, 5 configuration (including bad command-line usage).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, reports
from .agreement import AgreementConfig, agreement_report, alpha_per_image
from .curation import drop_annotator, parse_ground_truth
from .datamodel import CANONICAL_SCHEMA, FORMATS, serialize_annotation_set, validate
from .detect_eval import AVERAGES, CAP_SCOPES, EvalConfig, evaluate
from .errors import BBoxQAError, ConfigError
from .pipeline import (
    FAILED_MARKER,
    GT_RECIPES,
    OUTPUT_FORMATS,
    RunConfig,
    curate_ground_truth,
    load_annotations,
    load_label_map,
    read_bytes,
    run_pipeline,
    write_report,
)
from .quality import class_difficulty, rank_annotators, top_annotators, vitality_reports
from .synth import NoiseProfile, SceneSpec, generate_truth, simulate_corpus, simulate_detector

PathArg = click.Path(path_type=Path)


def _fail(stage: str, exc: BBoxQAError):
    click.echo(f"error [{stage}]: {exc}", err=True)
    sys.exit(exc.exit_code)


def _emit(kind: str, doc, fmt: str, out: Path | None):
    if out is None:
        click.echo(reports.render(kind, doc, fmt), nl=False)
    else:
        path = write_report(out, kind, doc, fmt)
        click.echo(f"wrote {path}", err=True)


def input_options(f):
    f = click.option("--label-map", type=PathArg, help="JSON label map applied while reading.")(f)
    f = click.option("--header", type=PathArg, help="Canonical JSON with images/labels, required for CSV input.")(f)
    f = click.option("--input-format", type=click.Choice(FORMATS), help="Default: by file extension.")(f)
    return click.argument("annotations", type=PathArg)(f)


def output_options(f):
    f = click.option("--format", "fmt", type=click.Choice(OUTPUT_FORMATS), default="json", show_default=True)(f)
    return click.option("--out", type=PathArg, help="Output directory; stdout when omitted.")(f)


def agreement_options(f):
    f = click.option("--drop-fraction", type=float, default=0.2, show_default=True)(f)
    return click.option("--seed", type=int, required=True, help="Seed for pixel dropping.")(f)


def _load(annotations, input_format, header, label_map):
    return load_annotations(annotations, input_format, header, load_label_map(label_map))


def _print_schema(ctx, _param, value):
    if value and not ctx.resilient_parsing:
        click.echo(json.dumps(CANONICAL_SCHEMA, indent=2))
        ctx.exit(0)


@click.group()
@click.version_option(__version__, prog_name="bboxqa")
@click.option("--schema", is_flag=True, expose_value=False, is_eager=True, callback=_print_schema, help="Print the canonical JSON schema.")
def cli():
    """Quality assurance for multi-annotator bounding-box datasets."""


@cli.command("validate")
@input_options
@output_options
def validate_cmd(annotations, input_format, header, label_map, out, fmt):
    """Parse an annotation file and report coverage, duplicates and class counts."""
    try:
        s = _load(annotations, input_format, header, label_map)
        _emit("validation", reports.validation_doc(validate(s)), fmt, out)
    except BBoxQAError as exc:
        _fail("validate", exc)


@cli.command("agreement")
@input_options
@agreement_options
@click.option("--class", "class_label", help="Restrict to one class channel.")
@click.option("--channel-mode", type=click.Choice(("pooled", "mean")), default="pooled", show_default=True)
@output_options
def agreement_cmd(annotations, input_format, header, label_map, seed, drop_fraction, class_label, channel_mode, out, fmt):
    """Per-image Krippendorff's alpha with mean, median and agreement band."""
    try:
        s = _load(annotations, input_format, header, label_map)
        cfg = AgreementConfig(drop_fraction, seed, class_label, frozenset(), channel_mode)
        _emit("agreement", agreement_report(alpha_per_image(s, cfg), cfg), fmt, out)
    except BBoxQAError as exc:
        _fail("agreement", exc)


@cli.command("vitality")
@input_options
@agreement_options
@output_options
def vitality_cmd(annotations, input_format, header, label_map, seed, drop_fraction, out, fmt):
    """Leave-one-out rater vitality for every annotator, with a ranking."""
    try:
        s = _load(annotations, input_format, header, label_map)
        cfg = AgreementConfig(drop_fraction, seed)
        vit = vitality_reports(s, cfg)
        _emit("vitality", reports.vitality_doc(vit, rank_annotators(vit.values()), cfg), fmt, out)
    except BBoxQAError as exc:
        _fail("vitality", exc)


@cli.command("difficulty")
@input_options
@agreement_options
@click.option("--class", "classes", multiple=True, help="Classes to score (repeatable); default all.")
@output_options
def difficulty_cmd(annotations, input_format, header, label_map, seed, drop_fraction, classes, out, fmt):
    """Class recognition difficulty: class-restricted alpha and vitality."""
    try:
        s = _load(annotations, input_format, header, label_map)
        cfg = AgreementConfig(drop_fraction, seed)
        docs = [class_difficulty(s, c, cfg) for c in (classes or s.labels)]
        _emit("difficulty", reports.difficulty_doc(docs, cfg), fmt, out)
    except BBoxQAError as exc:
        _fail("difficulty", exc)


@cli.command("curate")
@input_options
@click.option("--recipe", type=click.Choice(("drop", *GT_RECIPES)), required=True)
@click.option("--annotator", help="Annotator to leave out (recipe drop).")
@click.option("--top", multiple=True, help="Top annotator id (repeatable); otherwise ranked by vitality.")
@click.option("--top-k", type=int)
@click.option("--min-vitality", type=float)
@click.option("--original", type=PathArg, help="Released labels (recipe original).")
@click.option("--seed", type=int, help="Required for recipes that draw annotators.")
@click.option("--drop-fraction", type=float, default=0.2, show_default=True)
@output_options
def curate_cmd(annotations, input_format, header, label_map, recipe, annotator, top, top_k, min_vitality, original, seed, drop_fraction, out, fmt):
    """Build a leave-one-out training set or a ground-truth set."""
    try:
        lm = load_label_map(label_map)
        s = load_annotations(annotations, input_format, header, lm)
        if recipe == "drop":
            if annotator is None:
                raise ConfigError("recipe drop needs --annotator")
            result = drop_annotator(s, annotator)
            text = serialize_annotation_set(result, "csv" if fmt == "csv" else "canonical-json")
            if out is None:
                click.echo(text, nl=False)
            else:
                out.mkdir(parents=True, exist_ok=True)
                path = out / f"drop_{annotator}.{fmt}"
                path.write_text(text, encoding="utf-8", newline="\n")
                click.echo(f"wrote {path}", err=True)
            return
        chosen: list[str] = list(top)
        if recipe == "original":
            if original is None:
                raise ConfigError("recipe original needs --original")
            gt = curate_ground_truth(s, recipe, [], 0, load_annotations(original), lm)
        else:
            if seed is None:
                raise ConfigError(f"recipe {recipe} draws annotators at random and needs --seed")
            if not chosen:
                if top_k is None and min_vitality is None:
                    raise ConfigError("give --top, --top-k or --min-vitality")
                ranking = rank_annotators(vitality_reports(s, AgreementConfig(drop_fraction, seed)).values())
                chosen = top_annotators(ranking, top_k, min_vitality)
            gt = curate_ground_truth(s, recipe, chosen, seed)
        _emit("ground_truth", gt, fmt, out)
    except BBoxQAError as exc:
        _fail("curate", exc)


@cli.command("eval")
@click.argument("predictions", type=PathArg)
@click.argument("ground_truth", type=PathArg)
@click.option("--header", type=PathArg, help="Canonical JSON header for CSV predictions.")
@click.option("--label-map", type=PathArg)
@click.option("--iou-threshold", type=float, default=0.5, show_default=True)
@click.option("--cap", type=int)
@click.option("--cap-scope", type=click.Choice(CAP_SCOPES), default="global", show_default=True)
@click.option("--per-class/--no-per-class", default=True, show_default=True)
@click.option("--average", type=click.Choice(AVERAGES), default="micro", show_default=True)
@output_options
def eval_cmd(predictions, ground_truth, header, label_map, iou_threshold, cap, cap_scope, per_class, average, out, fmt):
    """Score predictions against a ground-truth set."""
    try:
        cfg = EvalConfig(iou_threshold, cap, cap_scope, per_class, average)
        gt = parse_ground_truth(read_bytes(ground_truth))
        preds = load_annotations(predictions, None, header, load_label_map(label_map))
        _emit("eval", reports.eval_doc(evaluate(preds, gt, cfg)), fmt, out)
    except BBoxQAError as exc:
        _fail("eval", exc)


DEFAULT_PROFILES = {
    "A1": {"p_miss": 0.15, "jitter_sigma": 6.0},
    "A2": {"p_miss": 0.05, "jitter_sigma": 2.0},
    "A3": {"p_miss": 0.05, "jitter_sigma": 2.0},
    "A4": {"p_miss": 0.05, "jitter_sigma": 2.0},
}


@cli.command("simulate")
@click.option("--seed", type=int, required=True)
@click.option("--config", "config_path", type=PathArg, help='JSON with optional "scene", "annotators", "detector".')
@click.option("--out", type=PathArg, required=True)
def simulate_cmd(seed, config_path, out):
    """Write a synthetic truth set, a multi-annotator corpus and detector predictions."""
    try:
        doc = {}
        if config_path is not None:
            doc = json.loads(read_bytes(config_path))
            if not isinstance(doc, dict):
                raise ConfigError("simulation config must be a JSON object")
        scene = SceneSpec.from_dict({"seed": seed, **doc.get("scene", {})})
        profiles = {a: NoiseProfile.from_dict(p) for a, p in doc.get("annotators", DEFAULT_PROFILES).items()}
        detector = NoiseProfile.from_dict(doc.get("detector", {"p_miss": 0.1, "jitter_sigma": 2.0, "p_spurious": 0.5}))
        truth = generate_truth(scene)
        corpus = simulate_corpus(truth, profiles, seed)
        preds = simulate_detector(truth, detector, seed)
        out.mkdir(parents=True, exist_ok=True)
        for name, s in (("truth", truth), ("annotations", corpus), ("predictions", preds)):
            (out / f"{name}.json").write_text(serialize_annotation_set(s), encoding="utf-8", newline="\n")
        click.echo(f"wrote truth, annotations and predictions to {out}", err=True)
    except BBoxQAError as exc:
        _fail("simulate", exc)
    except (TypeError, AttributeError, json.JSONDecodeError) as exc:
        _fail("simulate", ConfigError(f"bad simulation config: {exc}"))


@cli.command("report")
@click.argument("directory", type=click.Path(path_type=Path, file_okay=False, exists=True))
def report_cmd(directory):
    """Human-readable summary of the JSON reports in a directory."""
    docs = {}
    for kind in reports.REPORT_KINDS:
        path = directory / f"{kind}.json"
        if path.exists():
            docs[kind] = json.loads(path.read_text(encoding="utf-8"))
    failed = directory / FAILED_MARKER
    if not docs and not failed.exists():
        _fail("report", ConfigError(f"no JSON reports in {directory}"))
    text = reports.summarize(docs)
    if failed.exists():
        marker = json.loads(failed.read_text(encoding="utf-8"))
        text += f"FAILED at stage {marker['failed_stage']}: {marker['message']}\n"
    click.echo(text, nl=False)


@cli.command("run")
@click.argument("config_path", type=PathArg)
def run_cmd(config_path):
    """Run the full pipeline described by a JSON config file."""
    try:
        config = RunConfig.from_file(config_path)
    except BBoxQAError as exc:
        _fail("config", exc)
    bundle = run_pipeline(config)
    for kind, path in bundle.written.items():
        click.echo(f"wrote {kind}: {path}", err=True)
    if bundle.failed_stage is not None:
        click.echo(f"error [{bundle.failed_stage}]: {bundle.error}", err=True)
        sys.exit(bundle.exit_code)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="bboxqa", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.UsageError as exc:
        exc.show()
        sys.exit(ConfigError.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(ConfigError.exit_code)


if __name__ == "__main__":  # pragma: no cover
    main()
