import json
import subprocess
import sys

import pytest

from bboxqa import __version__
from bboxqa.cli import main
from bboxqa.pipeline import RunConfig, run_pipeline
from bboxqa.errors import ConfigError

REPORTS = ["agreement.json", "difficulty.json", "eval.json", "ground_truth.json", "validation.json", "vitality.json"]


def run_cli(args):
    try:
        main([str(a) for a in args])
    except SystemExit as exc:
        return exc.code or 0
    return 0


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    assert run_cli(["simulate", "--seed", 5, "--out", root]) == 0
    return root


def write_config(path, **fields):
    path.write_text(json.dumps(fields))
    return path


def test_simulate_outputs(corpus):
    doc = json.loads((corpus / "annotations.json").read_text())
    assert {a["id"] for a in doc["annotators"]} == {"A1", "A2", "A3", "A4"}
    assert all("score" in b for b in json.loads((corpus / "predictions.json").read_text())["boxes"])


def test_full_pipeline_twice_is_byte_identical(corpus, tmp_path):
    outputs = []
    for k in range(2):
        cfg = write_config(tmp_path / f"run{k}.json", annotations=str(corpus / "annotations.json"),
                           predictions=str(corpus / "predictions.json"), seed=1, out=f"out{k}")
        assert run_cli(["run", cfg]) == 0
        out = tmp_path / f"out{k}"
        assert sorted(p.name for p in out.iterdir()) == REPORTS
        outputs.append({name: (out / name).read_bytes() for name in REPORTS})
    assert outputs[0] == outputs[1]
    vit = json.loads(outputs[0]["vitality.json"])
    assert vit["ranking"][-1]["annotator_id"] == "A1"
    gt = json.loads(outputs[0]["ground_truth.json"])
    assert set(gt["provenance"].values()) <= {"A2", "A3", "A4"}


def test_csv_reports(corpus, tmp_path):
    cfg = write_config(tmp_path / "run.json", annotations=str(corpus / "annotations.json"),
                       predictions=str(corpus / "predictions.json"), seed=1, out="csv", format="csv")
    assert run_cli(["run", cfg]) == 0
    vit = (tmp_path / "csv" / "vitality.csv").read_text().splitlines()
    assert vit[0] == "annotator_id,mean_V,median_V,k_full_mean,k_loo_mean" and len(vit) == 5
    diff = (tmp_path / "csv" / "difficulty.csv").read_text().splitlines()
    assert diff[0].startswith("class,mean_alpha,median_alpha,V_A1")
    assert (tmp_path / "csv" / "eval.csv").read_text().startswith("scope,tp,fp,fn,precision,recall,f1,misclassified\noverall,")
    assert (tmp_path / "csv" / "ground_truth.csv").read_text().startswith("image_id,annotator_id,label,x,y,w,h,score\n")


def test_coverage_hole_exits_3_and_keeps_reports(corpus, tmp_path):
    doc = json.loads((corpus / "annotations.json").read_text())
    images = [im["id"] for im in doc["images"]]
    hole = {("A1", images[0]), ("A2", images[1]), ("A3", images[2]), ("A4", images[3])}
    doc["boxes"] = [b for b in doc["boxes"] if (b["annotator_id"], b["image_id"]) not in hole]
    doc["assignments"] = [a for a in doc.get("assignments", []) if (a["annotator_id"], a["image_id"]) not in hole]
    (tmp_path / "holes.json").write_text(json.dumps(doc))
    cfg = write_config(tmp_path / "run.json", annotations="holes.json", predictions=str(corpus / "predictions.json"),
                       seed=2, out="out", gt_recipe="single_top", top_k=3)
    assert run_cli(["run", cfg]) == 3
    out = tmp_path / "out"
    names = sorted(p.name for p in out.iterdir())
    assert names == ["agreement.json", "difficulty.json", "failed_stage.json", "validation.json", "vitality.json"]
    marker = json.loads((out / "failed_stage.json").read_text())
    assert marker["failed_stage"] == "curate" and marker["exit_code"] == 3
    assert run_cli(["report", out]) == 0


def test_subcommands(corpus, tmp_path, capsys):
    ann = corpus / "annotations.json"
    assert run_cli(["validate", ann]) == 0
    assert json.loads(capsys.readouterr().out)["coverage"]["A1"] == 1.0
    assert run_cli(["agreement", ann, "--seed", 3, "--out", tmp_path]) == 0
    assert run_cli(["vitality", ann, "--seed", 3, "--out", tmp_path]) == 0
    assert run_cli(["difficulty", ann, "--seed", 3, "--class", "person", "--out", tmp_path]) == 0
    assert run_cli(["curate", ann, "--recipe", "mixed_top", "--top-k", 3, "--seed", 3, "--out", tmp_path]) == 0
    assert run_cli(["curate", ann, "--recipe", "drop", "--annotator", "A1", "--out", tmp_path]) == 0
    assert "A1" not in (tmp_path / "drop_A1.json").read_text()
    assert run_cli(["eval", corpus / "predictions.json", tmp_path / "ground_truth.json", "--cap", 20, "--out", tmp_path]) == 0
    assert json.loads((tmp_path / "eval.json").read_text())["config"]["cap"] == 20
    capsys.readouterr()
    assert run_cli(["report", tmp_path]) == 0
    text = capsys.readouterr().out
    assert "band" in text and "hardest class: person" in text


def test_exit_codes(corpus, tmp_path):
    ann = corpus / "annotations.json"
    assert run_cli(["agreement", ann]) == 5  # --seed is required
    assert run_cli(["agreement", tmp_path / "missing.json", "--seed", 1]) == 5
    (tmp_path / "bad.json").write_text("{")
    assert run_cli(["validate", tmp_path / "bad.json"]) == 1
    two = json.loads(ann.read_text())
    two["annotators"] = two["annotators"][:2]
    keep = {a["id"] for a in two["annotators"]}
    two["boxes"] = [b for b in two["boxes"] if b["annotator_id"] in keep]
    two["assignments"] = [a for a in two.get("assignments", []) if a["annotator_id"] in keep]
    (tmp_path / "two.json").write_text(json.dumps(two))
    assert run_cli(["vitality", tmp_path / "two.json", "--seed", 1]) == 2
    preds = json.loads((corpus / "predictions.json").read_text())
    for b in preds["boxes"]:
        b.pop("score")
    (tmp_path / "noscore.json").write_text(json.dumps(preds))
    truth = corpus / "truth.json"
    assert run_cli(["eval", tmp_path / "noscore.json", truth, "--cap", 5]) == 4


def test_run_config_requires_seed(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"annotations": "a.json", "out": "o"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"annotations": "a.json", "out": "o", "seed": 1, "bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"annotations": "a.json", "out": "o", "seed": 1})  # eval needs predictions


def test_partial_stage_list(corpus, tmp_path):
    cfg = RunConfig.from_dict({"annotations": str(corpus / "annotations.json"), "seed": 1, "out": str(tmp_path),
                               "stages": ["validate", "curate"], "min_vitality": 0.0})
    bundle = run_pipeline(cfg)
    assert bundle.exit_code == 0 and sorted(bundle.written) == ["ground_truth", "validation"]


def test_version_and_schema():
    out = subprocess.run([sys.executable, "-m", "bboxqa.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
    out = subprocess.run([sys.executable, "-m", "bboxqa.cli", "--schema"], capture_output=True, text=True)
    assert json.loads(out.stdout)["title"] == "Annotation set"
