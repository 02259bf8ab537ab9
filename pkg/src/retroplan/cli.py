"""Command-line pipeline entry point.

Every subcommand is deterministic given its inputs and seeds, exits 0 on
success and prints a machine-readable JSON error to stderr on failure.
A resolved-config echo is written next to each command's main output.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import InvalidTarget, RetroplanError

DEFAULTS = {
    "weight.sequence": 1.0,
    "weight.selectivity": 1.5,
    "weight.center": 2.5,
    "epsilon": 1e-6,
    "thr.classifier": 0.0,
    "thr.prior": 0.0,
    "template.radius": 1,
    "expansion.limit": 500,
    "generator.top_k": 50,
    "generator.fanout": 50,
    "fingerprint.radius": 2,
    "fingerprint.bits": 1024,
    "markov.order": 2,
    "markov.smoothing": 0.05,
    "seed": 0,
}


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    config = dict(DEFAULTS)
    if path:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise RetroplanError(f"config line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            config[key.strip()] = _coerce(value.strip())
    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value
    return config


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def echo_config(config: dict, out_path: str | Path) -> None:
    path = Path(str(out_path) + ".config")
    lines = [f"{k}={config[k]}" for k in sorted(config)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fail(err: Exception) -> None:
    if isinstance(err, RetroplanError):
        payload = err.to_dict()
    else:
        payload = {"code": "error", "message": str(err)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


@click.group()
@click.version_option(__version__)
def main():
    """Retrosynthesis planning with plausibility filtering."""


def common_options(fn):
    fn = click.option("--seed", type=int, default=None,
                      help="Override the configured random seed.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="key=value config file.")(fn)
    fn = click.option("--quiet", is_flag=True, default=False)(fn)
    return fn


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@common_options
def canonicalize(input_path, output_path, seed, config_path, quiet):
    """Batch-canonicalize SMILES, one per line."""
    from .chem import canonical_smiles, parse_smiles

    config = load_config(config_path, {"seed": seed})
    errors = []
    written = 0
    try:
        with open(input_path, encoding="utf-8") as src, \
                open(output_path, "w", encoding="utf-8") as dst:
            for lineno, raw in enumerate(src, 1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    dst.write(canonical_smiles(parse_smiles(line)) + "\n")
                    written += 1
                except RetroplanError as err:
                    errors.append({"line": lineno, **err.to_dict()})
        echo_config(config, output_path)
    except OSError as err:
        _fail(err)
    _say(quiet, f"canonicalized {written} molecules, {len(errors)} errors")
    if errors and not quiet:
        click.echo(json.dumps(errors[:20], indent=2), err=True)


@main.command("extract-templates")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--radius", type=int, default=None)
@common_options
def extract_templates(corpus_path, output_path, radius, seed, config_path,
                      quiet):
    """Extract a deduplicated template library from a mapped corpus."""
    from .reactions import TemplateLibrary, load_corpus

    config = load_config(config_path,
                         {"template.radius": radius, "seed": seed})
    try:
        corpus, parse_report = load_corpus(corpus_path)
        library, skip_report = TemplateLibrary.from_reactions(
            corpus, int(config["template.radius"]))
        library.save(output_path)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"{len(library)} templates from {len(corpus)} reactions "
                f"({len(parse_report)} parse failures, "
                f"{len(skip_report)} extraction failures)")


@main.command("build-index")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@common_options
def build_index_cmd(corpus_path, seed, output_path, config_path, quiet):
    """Build the two-tier precedent index."""
    from .reactions import load_corpus
    from .retrieval import build_index, corpus_file_hash, save_index

    config = load_config(config_path, {"seed": seed})
    try:
        corpus, _ = load_corpus(corpus_path)
        index, report = build_index(corpus, corpus_file_hash(corpus_path))
        save_index(output_path, index)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"indexed {index.corpus_size} reactions into "
                f"{len(index.coarse)} coarse / {len(index.fine)} fine clusters"
                f" ({len(report)} failures)")


@main.command("gen-negatives")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.argument("templates_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--mode", type=click.Choice(["forward", "retro2"]),
              default="forward")
@click.option("--count", "-n", type=int, default=100)
@common_options
def gen_negatives(corpus_path, templates_path, output_path, mode, count,
                  seed, config_path, quiet):
    """Generate synthetic negative reactions."""
    from .reactions import TemplateLibrary, generate_negatives, load_corpus, \
        write_corpus

    config = load_config(config_path, {"seed": seed})
    try:
        corpus, _ = load_corpus(corpus_path)
        library = TemplateLibrary.load(templates_path)
        negatives = generate_negatives(
            corpus, library, mode, count, int(config["seed"]))
        write_corpus(output_path, negatives)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"wrote {len(negatives)} {mode} negatives")


@main.command()
@click.argument("model_kind", type=click.Choice(["prior", "plausibility"]))
@click.argument("corpus_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--negatives", "negatives_path", type=click.Path(exists=True),
              default=None, help="Negative reactions (plausibility only).")
@common_options
def train(model_kind, corpus_path, output_path, negatives_path, seed,
          config_path, quiet):
    """Train the token prior or the plausibility baseline."""
    from .reactions import load_corpus
    from .retrieval import corpus_file_hash

    config = load_config(config_path, {"seed": seed})
    try:
        corpus, _ = load_corpus(corpus_path)
        if model_kind == "prior":
            from .scoring import serialize_reaction, train_markov_model

            sequences = [serialize_reaction(r).text for r in corpus]
            model = train_markov_model(
                sequences, int(config["markov.order"]),
                float(config["markov.smoothing"]), seed=int(config["seed"]),
                corpus_hash=corpus_file_hash(corpus_path))
            model.save(output_path)
            summary = f"perplexity {model.meta['heldout_perplexity']:.3f}"
        else:
            from .scoring import train_plausibility_baseline

            if not negatives_path:
                raise RetroplanError("--negatives is required")
            negatives, _ = load_corpus(negatives_path)
            clf = train_plausibility_baseline(
                corpus, negatives,
                fp_radius=int(config["fingerprint.radius"]),
                n_bits=int(config["fingerprint.bits"]),
                seed=int(config["seed"]))
            clf.meta["corpus_hash"] = corpus_file_hash(corpus_path)
            clf.save(output_path)
            auc = clf.meta["heldout_auc"]
            summary = f"held-out AUC {auc:.3f}" if auc else "no holdout"
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"trained {model_kind}: {summary}")


def _load_scorer(config, prior_path, classifier_path, index_path,
                 calibration_corpus):
    from .reactions import load_corpus
    from .retrieval import load_index
    from .scoring import (
        FingerprintClassifier,
        MarkovTokenModel,
        PriorWeights,
        ReactionScorer,
        fit_calibrator,
    )

    model = MarkovTokenModel.load(prior_path)
    classifier = FingerprintClassifier.load(classifier_path)
    index = load_index(index_path)
    weights = PriorWeights(
        float(config["weight.sequence"]),
        float(config["weight.selectivity"]),
        float(config["weight.center"]),
    )
    reference, _ = load_corpus(calibration_corpus)
    calibrator = fit_calibrator(
        (model, weights, float(config["epsilon"]),
         int(config["template.radius"])), reference)
    return ReactionScorer(
        model, classifier, index, calibrator, weights,
        epsilon=float(config["epsilon"]),
        template_radius=int(config["template.radius"]),
        thr_classifier=float(config["thr.classifier"]),
        thr_prior=float(config["thr.prior"]),
    )


@main.command()
@click.argument("reactions_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--prior", "prior_path", type=click.Path(exists=True),
              required=True)
@click.option("--classifier", "classifier_path", type=click.Path(exists=True),
              required=True)
@click.option("--index", "index_path", type=click.Path(exists=True),
              required=True)
@click.option("--calibration-corpus", type=click.Path(exists=True),
              required=True, help="Reactions for prior rank calibration.")
@common_options
def score(reactions_path, output_path, prior_path, classifier_path,
          index_path, calibration_corpus, seed, config_path, quiet):
    """Score reactions into a JSONL of bundles."""
    from .reactions import load_corpus
    from .scoring import dump_score_rows

    config = load_config(config_path, {"seed": seed})
    try:
        scorer = _load_scorer(config, prior_path, classifier_path,
                              index_path, calibration_corpus)
        reactions, _ = load_corpus(reactions_path)
        rows = [(r.source_id, scorer.score(r)) for r in reactions]
        dump_score_rows(output_path, rows)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"scored {len(rows)} reactions")


@main.command()
@click.argument("scores_path", type=click.Path(exists=True))
@click.argument("labels_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--target-precision", type=float, default=0.8)
@common_options
def calibrate(scores_path, labels_path, output_path, target_precision, seed,
              config_path, quiet):
    """Grid-search ensemble thresholds on labeled scores.

    Labels file: JSON lines {"reaction_id": ..., "label": 0|1}.
    """
    from .scoring import calibrate_thresholds, load_score_rows, save_thresholds

    config = load_config(config_path, {"seed": seed})
    try:
        rows = dict(load_score_rows(scores_path))
        labeled = []
        with open(labels_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                rid = record["reaction_id"]
                if rid in rows:
                    labeled.append((rows[rid], int(record["label"])))
        result = calibrate_thresholds(labeled, target_precision)
        save_thresholds(output_path, result)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet,
         f"thr_classifier={result.thr_classifier:.4f} "
         f"thr_prior={result.thr_prior:.4f} precision={result.precision:.3f} "
         f"recall={result.recall:.3f} achieved={result.achieved_target}")


@main.command()
@click.argument("target_smiles")
@click.argument("output_path", type=click.Path())
@click.option("--stock", "stock_path", type=click.Path(exists=True),
              required=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True),
              required=True)
@click.option("--prior", "prior_path", type=click.Path(exists=True))
@click.option("--classifier", "classifier_path", type=click.Path(exists=True))
@click.option("--index", "index_path", type=click.Path(exists=True))
@click.option("--calibration-corpus", type=click.Path(exists=True))
@click.option("--thresholds", "thresholds_path", type=click.Path(exists=True),
              help="Calibration output; overrides configured thresholds.")
@click.option("--no-filter", is_flag=True, default=False,
              help="Disable the plausibility filter.")
@common_options
def plan(target_smiles, output_path, stock_path, templates_path, prior_path,
         classifier_path, index_path, calibration_corpus, thresholds_path,
         no_filter, seed, config_path, quiet):
    """Plan a synthesis route for a target SMILES."""
    from .chem import parse_smiles
    from .errors import SmilesParseError
    from .reactions import TemplateLibrary
    from .scoring import load_thresholds
    from .search import (
        BuildingBlockSet,
        TemplateGenerator,
        retro_star,
        route_report,
        save_route,
    )

    config = load_config(config_path, {"seed": seed})
    try:
        try:
            target = parse_smiles(target_smiles)
        except SmilesParseError as err:
            raise InvalidTarget(f"target does not parse: {err}") from err
        stock = BuildingBlockSet.from_file(stock_path)
        library = TemplateLibrary.load(templates_path)
        generator = TemplateGenerator(
            library, int(config["generator.top_k"]),
            int(config["generator.fanout"]))
        scorer = None
        if prior_path and classifier_path and index_path \
                and calibration_corpus:
            scorer = _load_scorer(config, prior_path, classifier_path,
                                  index_path, calibration_corpus)
            if thresholds_path:
                thresholds = load_thresholds(thresholds_path)
                scorer.thr_classifier = thresholds.thr_classifier
                scorer.thr_prior = thresholds.thr_prior
        result = retro_star(
            target, generator, stock, scorer=scorer,
            filter_enabled=not no_filter and scorer is not None,
            expansion_limit=int(config["expansion.limit"]))
        report = route_report(result.route, stock) if result.route else {
            "target": target_smiles,
            "steps": None,
            "expansions": result.expansions,
            "solved": False,
        }
        save_route(output_path, report)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    solved = result.route is not None
    _say(quiet, f"solved={solved} expansions={result.expansions}"
                + (f" steps={len(result.route.steps)}" if solved else ""))
    if not solved:
        sys.exit(2)


@main.command("eval")
@click.argument("labels_path", type=click.Path(exists=True))
@click.argument("scores_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@common_options
def eval_cmd(labels_path, scores_path, output_path, seed, config_path, quiet):
    """Scorer-comparison metrics from annotations and score bundles."""
    from .errors import SingleClass
    from .evalproto import (
        BINARIZE_NEGATIVE,
        BINARIZE_POSITIVE,
        IssueCategory,
        binarize,
        fp_overlap,
        fp_tn_counts_by_category,
        load_annotations,
        per_category_auc,
        pr_auc,
        roc_auc,
    )
    from .scoring import load_score_rows

    config = load_config(config_path, {"seed": seed})
    try:
        annotations = load_annotations(labels_path)
        rows = dict(load_score_rows(scores_path))
        groups = dict(binarize(annotations))
        labeled = [a for a in annotations
                   if a.reaction_id in rows
                   and groups[a.reaction_id] != "excluded"]
        ys = [int(groups[a.reaction_id] == BINARIZE_POSITIVE)
              for a in labeled]
        report = {"n_annotations": len(annotations),
                  "n_evaluated": len(labeled)}
        if ys and 0 < sum(ys) < len(ys):
            signals = {
                "prior": lambda b: b.prior_score,
                "classifier": lambda b: b.classifier_score,
                "precedent": lambda b: float(b.reference_count),
                "ensemble": lambda b: b.ensemble,
            }
            report["auc"] = {}
            for name, pick in signals.items():
                xs = [pick(rows[a.reaction_id]) for a in labeled]
                report["auc"][name] = {
                    "roc_auc": roc_auc(xs, ys), "pr_auc": pr_auc(xs, ys)}
            predictions = {
                name: {a.reaction_id: int(pick(rows[a.reaction_id]) >
                                          _signal_threshold(rows[a.reaction_id], name))
                       for a in labeled}
                for name, pick in signals.items()
            }
            fp_sets = {
                name: {a.reaction_id for a in labeled
                       if groups[a.reaction_id] == BINARIZE_NEGATIVE
                       and preds[a.reaction_id]}
                for name, preds in predictions.items()
            }
            value, defined = fp_overlap(fp_sets)
            report["fp_overlap"] = {"value": value if defined else None,
                                    "defined": defined}
            report["fp_tn_by_category"] = fp_tn_counts_by_category(
                labeled, predictions["ensemble"])
            ens = {a.reaction_id: rows[a.reaction_id].ensemble
                   for a in labeled}
            report["per_category"] = []
            for category in IssueCategory:
                if category is IssueCategory.NO_PROBLEM:
                    continue
                try:
                    report["per_category"].append(
                        per_category_auc(labeled, ens, category))
                except SingleClass:
                    continue
        else:
            report["auc"] = "insufficient data"
        with open(output_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
        echo_config(config, output_path)
    except RetroplanError as err:
        _fail(err)
    _say(quiet, f"evaluated {len(labeled)} labeled reactions")


def _signal_threshold(bundle, name: str) -> float:
    if name == "prior":
        return bundle.thr_prior
    if name == "classifier":
        return bundle.thr_classifier
    if name == "precedent":
        return 0.0
    return 0.5  # ensemble score is itself thresholded downstream


@main.command()
@click.argument("data_dir", type=click.Path())
@click.option("--addr", default=None, help="host:port (default 127.0.0.1:8077)")
@common_options
def serve(data_dir, addr, seed, config_path, quiet):
    """Run the review service over a data directory."""
    import os

    import uvicorn

    from .service import DEFAULT_ADDR, create_app

    addr = addr or os.environ.get("REVIEW_ADDR", DEFAULT_ADDR)
    host, _, port = addr.partition(":")
    token = os.environ.get("REVIEW_TOKEN") or None
    app = create_app(data_dir, token)
    uvicorn.run(app, host=host, port=int(port or 8077),
                log_level="warning" if quiet else "info")


@main.command("make-demo-data")
@click.argument("out_dir", type=click.Path())
@click.option("--reactions", "-n", type=int, default=1000)
@click.option("--targets", type=int, default=20)
@common_options
def make_demo_data(out_dir, reactions, targets, seed, config_path, quiet):
    """Write a synthetic corpus, stock file and target list."""
    from .corpusgen import (
        generate_corpus,
        generate_search_fixtures,
        write_stock,
    )
    from .reactions import write_corpus

    config = load_config(config_path, {"seed": seed})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(reactions, int(config["seed"]) or 7)
    write_corpus(out / "corpus.txt", corpus)
    fixtures, stock = generate_search_fixtures(corpus, targets)
    write_stock(out / "stock.txt", stock)
    with open(out / "targets.txt", "w", encoding="utf-8") as fh:
        for fixture in fixtures:
            fh.write(f"{fixture.target}\t{fixture.target_id}"
                     f"\tdepth={fixture.depth}\n")
    echo_config(config, out / "demo")
    _say(quiet, f"wrote {len(corpus)} reactions, {len(stock)} stock molecules,"
                f" {len(fixtures)} targets to {out}")


if __name__ == "__main__":
    main()
