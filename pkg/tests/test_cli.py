import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from retroplan.cli import main
from retroplan.corpusgen import generate_corpus, generate_search_fixtures, write_stock
from retroplan.reactions import write_corpus


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliws")
    corpus = generate_corpus(150, seed=7)
    write_corpus(root / "corpus.txt", corpus)
    fixtures, stock = generate_search_fixtures(corpus, count=3, seed=11)
    write_stock(root / "stock.txt", stock)
    (root / "targets.txt").write_text(
        "\n".join(f.target for f in fixtures) + "\n")
    return root, corpus, fixtures


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_canonicalize_idempotent(workspace):
    root, _, _ = workspace
    first = root / "canon1.txt"
    second = root / "canon2.txt"
    assert run("canonicalize", root / "stock.txt", first).exit_code == 0
    assert run("canonicalize", first, second).exit_code == 0
    assert first.read_text() == second.read_text()
    assert (root / "canon1.txt.config").exists()


def test_canonicalize_reports_bad_lines(workspace, tmp_path):
    root, _, _ = workspace
    bad = tmp_path / "bad.txt"
    bad.write_text("CCO\nC(C\nXX\n")
    result = run("canonicalize", bad, tmp_path / "out.txt")
    assert result.exit_code == 0
    assert "2 errors" in result.output
    assert len((tmp_path / "out.txt").read_text().splitlines()) == 1


def test_extract_templates_radius_changes_library(workspace):
    root, _, _ = workspace
    r0 = root / "tpl0.txt"
    r1 = root / "tpl1.txt"
    assert run("extract-templates", root / "corpus.txt", r0,
               "--radius", 0).exit_code == 0
    assert run("extract-templates", root / "corpus.txt", r1,
               "--radius", 1).exit_code == 0
    n0 = len([l for l in r0.read_text().splitlines() if not l.startswith("#")])
    n1 = len([l for l in r1.read_text().splitlines() if not l.startswith("#")])
    assert n0 != n1


def test_extract_templates_deterministic(workspace):
    root, _, _ = workspace
    a, b = root / "tplA.txt", root / "tplB.txt"
    run("extract-templates", root / "corpus.txt", a)
    run("extract-templates", root / "corpus.txt", b)
    assert a.read_text() == b.read_text()


def test_empty_corpus_empty_library(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    out = tmp_path / "tpl.txt"
    assert run("extract-templates", empty, out).exit_code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines == []


def test_missing_file_machine_readable_error(tmp_path):
    result = run("build-index", tmp_path / "nope.txt", tmp_path / "out.txt")
    assert result.exit_code != 0


def test_full_pipeline_and_plan(workspace):
    root, corpus, fixtures = workspace
    assert run("build-index", root / "corpus.txt",
               root / "index.txt").exit_code == 0
    assert run("gen-negatives", root / "corpus.txt", root / "tpl1.txt",
               root / "negs.txt", "--mode", "retro2", "-n", 12,
               "--seed", 3).exit_code == 0
    assert run("train", "prior", root / "corpus.txt",
               root / "prior.json").exit_code == 0
    assert run("train", "plausibility", root / "corpus.txt",
               root / "clf.json", "--negatives",
               root / "negs.txt").exit_code == 0

    result = run("score", root / "negs.txt", root / "scores.jsonl",
                 "--prior", root / "prior.json",
                 "--classifier", root / "clf.json",
                 "--index", root / "index.txt",
                 "--calibration-corpus", root / "corpus.txt")
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in
            (root / "scores.jsonl").read_text().splitlines()]
    assert len(rows) == 12
    for row in rows:
        assert {"reaction_id", "prior_score", "classifier_score",
                "reference_count", "ensemble", "accepted",
                "components"} <= set(row)
        if row["reference_count"] == 0:
            assert row["ensemble"] == 0.0

    # labels for calibration: negatives get 0; corpus sample gets 1
    sample = corpus[:30]
    from retroplan.reactions import write_corpus as wc

    wc(root / "possample.txt", sample)
    result = run("score", root / "possample.txt", root / "pos_scores.jsonl",
                 "--prior", root / "prior.json",
                 "--classifier", root / "clf.json",
                 "--index", root / "index.txt",
                 "--calibration-corpus", root / "corpus.txt")
    assert result.exit_code == 0
    merged = root / "all_scores.jsonl"
    merged.write_text((root / "scores.jsonl").read_text()
                      + (root / "pos_scores.jsonl").read_text())
    labels = root / "labels.jsonl"
    with open(labels, "w") as fh:
        for row in rows:
            fh.write(json.dumps({"reaction_id": row["reaction_id"],
                                 "label": 0}) + "\n")
        for rxn in sample:
            fh.write(json.dumps({"reaction_id": rxn.source_id,
                                 "label": 1}) + "\n")
    result = run("calibrate", merged, labels, root / "thr.json",
                 "--target-precision", 0.8)
    assert result.exit_code == 0, result.output
    thresholds = json.loads((root / "thr.json").read_text())
    assert {"thr_classifier", "thr_prior", "precision", "recall",
            "achieved_target"} <= set(thresholds)

    target = fixtures[0].target
    result = run("plan", target, root / "route.json",
                 "--stock", root / "stock.txt",
                 "--templates", root / "tpl1.txt", "--no-filter")
    assert result.exit_code == 0, result.output
    route = json.loads((root / "route.json").read_text())
    assert route["steps"]
    assert route["in_stock_leaves"]

    filtered = run("plan", target, root / "route_f.json",
                   "--stock", root / "stock.txt",
                   "--templates", root / "tpl1.txt",
                   "--prior", root / "prior.json",
                   "--classifier", root / "clf.json",
                   "--index", root / "index.txt",
                   "--calibration-corpus", root / "corpus.txt",
                   "--thresholds", root / "thr.json")
    assert filtered.exit_code in (0, 2), filtered.output
    if filtered.exit_code == 0:
        route_f = json.loads((root / "route_f.json").read_text())
        for step in route_f["steps"]:
            assert step["scores"]["accepted"] == 1


def test_plan_rejects_bad_target(workspace):
    root, _, _ = workspace
    result = run("plan", "C(C", root / "r.json",
                 "--stock", root / "stock.txt",
                 "--templates", root / "tpl1.txt", "--no-filter")
    assert result.exit_code == 1
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["code"] == "invalid_target"


def test_eval_command(workspace, tmp_path):
    root, corpus, _ = workspace
    labels = tmp_path / "ann.jsonl"
    rows = []
    for i, rxn in enumerate(corpus[:8]):
        conf = "safe_bet" if i % 2 == 0 else "nonsense"
        cat = "no_problem" if i % 2 == 0 else "magic"
        rows.append({
            "schema_version": 1, "reaction_id": rxn.source_id,
            "route_id": "r", "step_index": i, "confidence": conf,
            "category": cat, "note": "", "annotator": "t",
            "timestamp": "", "protocol_step": 1 if conf == "nonsense" else 7,
        })
    labels.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    from retroplan.reactions import write_corpus as wc

    wc(root / "evalsample.txt", corpus[:8])
    assert run("score", root / "evalsample.txt", root / "eval_scores.jsonl",
               "--prior", root / "prior.json",
               "--classifier", root / "clf.json",
               "--index", root / "index.txt",
               "--calibration-corpus", root / "corpus.txt").exit_code == 0
    result = run("eval", labels, root / "eval_scores.jsonl",
                 tmp_path / "metrics.json")
    assert result.exit_code == 0, result.output
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert "auc" in metrics
    assert metrics["n_evaluated"] == 8


def test_config_file_and_override(workspace, tmp_path):
    root, _, _ = workspace
    cfg = tmp_path / "run.cfg"
    cfg.write_text("template.radius=0\nseed=5\n")
    out = tmp_path / "tpl.txt"
    assert run("extract-templates", root / "corpus.txt", out,
               "--config", cfg).exit_code == 0
    echo = (str(out) + ".config")
    content = Path(echo).read_text()
    assert "template.radius=0" in content
    assert "seed=5" in content
