"""
Command-line entry point: `stancelab <subcommand> [options]`.

Exit codes: 0 success, 1 invalid input data, 2 runtime failure, 3 bad configuration.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from stancelab.__about__ import __version__
from stancelab.calibration import CalibratorModel, load_polarity_lexicon
from stancelab.config import BackendSpec, PipelineConfig
from stancelab.constants import DEFAULT_TAU, PROMPT_TEMPLATE_NAMES
from stancelab.core import ARTIFACTS, StanceLab, calibrated_name, run_pipeline, slug
from stancelab.counterfactual import augment_corpus
from stancelab.dataset import balance_report, fleiss_kappa, majority_labels
from stancelab.errors import (
    ConfigError,
    CorpusParseError,
    ModelManifestError,
    NoMentionError,
    UnknownEntityError,
    ValidationError,
)
from stancelab.io import load_annotations, load_corpus, load_predictions, save_corpus, save_predictions
from stancelab.io.jsonl import write_json
from stancelab.metrics import MetricReport
from stancelab.predictor import PredictorConfig, ResponseCache, build_backend, load_template, predict_batch
from stancelab.report import per_entity_table, render_leaderboard, row_from_report
from stancelab.schema import StanceLabel
from stancelab.simulator import SimulatorConfig, simulate_batch

logger = logging.getLogger("stancelab")

INPUT_ERRORS = (CorpusParseError, ValidationError, UnknownEntityError, NoMentionError, ModelManifestError)


def _pipeline_config(args):
    if not args.config:
        return None
    return PipelineConfig.from_file(args.config).with_overrides(seed=args.seed, output_dir=args.out, trace=args.trace)


def _corpus_paths(args, config):
    corpus = args.corpus or (config.corpus if config else None)
    lexicon = args.lexicon or (config.lexicon if config else None)
    if corpus is None or lexicon is None:
        raise ConfigError("I need a corpus and a lexicon: pass --corpus/--lexicon or a --config that names them.")
    return corpus, lexicon


def _output(args, explicit, artifact):
    """Explicit --output wins; otherwise the standard name under --out."""
    if explicit:
        return Path(explicit)
    if args.out:
        return Path(args.out) / artifact
    return None


def _require_output(path, flag="--output"):
    if path is None:
        raise ConfigError(f"Tell me where to write the result with {flag} or --out.")
    return path


def _parse_entity_bias(values):
    bias = {}
    for value in values or []:
        try:
            entity_id, rest = value.split("=", 1)
            label, rate = rest.split(":", 1)
            bias[entity_id] = (StanceLabel(label), float(rate))
        except ValueError as e:
            raise ConfigError(f"--entity-bias expects ENTITY=LABEL:RATE, got '{value}'.") from e
    return bias


def cmd_validate(args):
    config = _pipeline_config(args)
    corpus = load_corpus(*_corpus_paths(args, config))
    report = balance_report(corpus.originals(), tolerance=args.tolerance).to_dict()
    if args.annotations:
        annotations = load_annotations(args.annotations)
        report["fleiss_kappa"] = fleiss_kappa(annotations)
        majority = majority_labels(annotations)
        report["unresolved_items"] = sorted(k for k, v in majority.items() if v is None)
    print(f"{len(corpus)} examples over {len(corpus.lexicon)} entities; balanced={report['balanced']}")
    if "fleiss_kappa" in report:
        print(f"Fleiss' kappa = {report['fleiss_kappa']:.4f}")
    out = _output(args, args.output, ARTIFACTS["balance"])
    if out:
        write_json(out, report)
    return 0


def cmd_generate_cf(args):
    config = _pipeline_config(args)
    corpus = load_corpus(*_corpus_paths(args, config))
    augmented, sets = augment_corpus(corpus.originals(), strict=args.strict)
    out = _require_output(_output(args, args.output, ARTIFACTS["augmented"]))
    save_corpus(augmented, out)
    print(f"Wrote {len(augmented)} examples ({len(augmented) - len(sets)} variants) to {out}")
    return 0


def _predictor_config(args, config):
    if args.backend and config:
        for spec in config.backends:
            if spec.name == args.backend:
                return spec
        raise ConfigError(f"I couldn't find backend '{args.backend}' in the config. I have {[b.name for b in config.backends]}.")
    kind = args.kind or "replay"
    predictor = PredictorConfig(
        kind=kind, name=args.backend, endpoint=args.endpoint, model=args.model,
        max_in_flight=args.max_in_flight, retries=args.retries, cache_path=args.cache, trace=args.trace,
    )
    return BackendSpec(predictor=predictor, predictions=Path(args.predictions) if args.predictions else None)


def cmd_predict(args):
    config = _pipeline_config(args)
    corpus = load_corpus(*_corpus_paths(args, config))
    spec = _predictor_config(args, config)
    if spec.predictor.kind == "simulator":
        raise ConfigError("Use the 'simulate' subcommand for the simulator backend.")
    backend = build_backend(spec.predictor, predictions_path=spec.predictions)
    template = load_template(args.template or (config.template if config else "raw"),
                             args.templates_dir or (config.templates_dir if config else None))
    cache = ResponseCache(spec.predictor.cache_path) if spec.predictor.cache_path else None
    records = predict_batch(backend, list(corpus), template, spec.predictor, corpus.lexicon, cache=cache)
    out = _require_output(_output(args, args.output, f"predictions/{slug(backend.name)}.jsonl"))
    save_predictions(records, out)
    failed = sum(1 for r in records if not r.ok)
    print(f"Wrote {len(records)} predictions ({failed} failed) to {out}")
    return 0


def cmd_simulate(args):
    config = _pipeline_config(args)
    corpus = load_corpus(*_corpus_paths(args, config))
    simulators = [b for b in config.backends if b.simulator is not None] if config else []
    if args.backend:
        simulators = [b for b in simulators if b.name == args.backend]
        if not simulators:
            raise ConfigError(f"I couldn't find a simulator backend named '{args.backend}' in the config.")
    if simulators:
        sim = simulators[0].simulator
    else:
        sim = SimulatorConfig(
            leakage_rate=args.leakage,
            entity_bias=_parse_entity_bias(args.entity_bias),
            base_accuracy=args.accuracy,
            seed=args.seed if args.seed is not None else 0,
            order=tuple(args.order.split(",")),
        )
    records = simulate_batch(list(corpus), sim)
    out = _require_output(_output(args, args.output, "predictions/simulator.jsonl"))
    save_predictions(records, out)
    print(f"Wrote {len(records)} simulated predictions to {out}")
    return 0


def _lab(args, config, predictions_path, system):
    corpus = load_corpus(*_corpus_paths(args, config))
    polarity_path = args.polarity or (config.polarity_lexicon if config else None)
    lab = StanceLab(
        corpus,
        polarity=load_polarity_lexicon(polarity_path) if polarity_path else None,
        train_config=config.train if config else None,
        tau=args.tau if args.tau is not None else (config.tau if config else DEFAULT_TAU),
        skip_empty_classes=getattr(args, "skip_empty_classes", False),
        exclude_neutral=getattr(args, "exclude_neutral", False),
    )
    lab.generate_counterfactuals()
    lab.add_predictions(system, load_predictions(predictions_path))
    return lab


def cmd_calibrate(args):
    config = _pipeline_config(args)
    system = args.system
    lab = _lab(args, config, args.predictions, system)
    model = None
    if args.model:
        model = CalibratorModel.load(args.model)
    elif args.fit_to:
        model = lab.fit(system)
        model.save(args.fit_to)
        print(f"Saved fitted calibrator to {args.fit_to}")
    records = lab.calibrate(system, model)
    out = _require_output(_output(args, args.output, "predictions/calibrated.jsonl"))
    save_predictions(records, out)
    mode = "model" if model is not None else "consensus fallback"
    print(f"Wrote {len(records)} calibrated predictions ({mode}) to {out}")
    return 0


def cmd_evaluate(args):
    config = _pipeline_config(args)
    system = args.system
    lab = _lab(args, config, args.predictions, system)
    if args.model:
        lab.calibrate(system, CalibratorModel.load(args.model))
        report = lab.evaluate(calibrated_name(system), ood=not args.no_ood, calibrated_from=system)
    else:
        report = lab.evaluate(system, ood=not args.no_ood)
    print(report.to_table())
    out = _output(args, args.output, f"reports/{slug(system)}.json")
    if out:
        write_json(out, report.to_dict())
    return 0


def cmd_report(args):
    reports = [MetricReport.from_dict(json.loads(Path(p).read_text(encoding="utf-8"))) for p in args.reports]
    if not reports:
        raise ConfigError("I need at least one report file to build a leaderboard.")
    rows = [row_from_report(r) for r in reports]
    document = render_leaderboard(rows, args.format)
    sys.stdout.write(document)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = ARTIFACTS["leaderboard_md"] if args.format == "markdown" else ARTIFACTS["leaderboard_csv"]
        with (out / name).open("w", encoding="utf-8", newline="") as fh:
            fh.write(document)
        per_entity_table(reports).to_csv(out / ARTIFACTS["per_entity"], index=False, lineterminator="\r\n")
    return 0


def cmd_run(args):
    config = _pipeline_config(args)
    if config is None:
        raise ConfigError("The 'run' subcommand needs --config.")
    result = run_pipeline(config)
    print(result.artifacts["leaderboard_md"].read_text(encoding="utf-8"))
    return 0


def _add_corpus_args(parser):
    parser.add_argument("--corpus", help="Corpus JSONL (defaults to the config's corpus)")
    parser.add_argument("--lexicon", help="Entity lexicon JSON (defaults to the config's lexicon)")


def build_parser():
    parser = argparse.ArgumentParser(prog="stancelab", description="Stance-detection bias audit toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Pipeline config JSON")
    parser.add_argument("--seed", type=int, help="Overrides every seed in the config")
    parser.add_argument("--out", help="Output directory for standard artifact names")
    parser.add_argument("--trace", action="store_true", help="Debug logging, including redacted HTTP bodies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="Validate a corpus and report label balance")
    _add_corpus_args(p)
    p.add_argument("--annotations", help="Per-annotator stance labels JSONL for Fleiss' kappa")
    p.add_argument("--tolerance", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate-cf", help="Write the corpus augmented with entity-swapped variants")
    _add_corpus_args(p)
    p.add_argument("--strict", action="store_true", help="Fail on examples that never mention their target")
    p.add_argument("--output")
    p.set_defaults(func=cmd_generate_cf)

    p = sub.add_parser("predict", help="Run a replay or chat backend over a corpus")
    _add_corpus_args(p)
    p.add_argument("--backend", help="Backend name (looked up in --config when given)")
    p.add_argument("--kind", choices=["replay", "chat"])
    p.add_argument("--predictions", help="Replay predictions file")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--template", choices=PROMPT_TEMPLATE_NAMES)
    p.add_argument("--templates-dir")
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--cache", help="Response cache JSONL")
    p.add_argument("--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Simulated biased predictions (replay-compatible output)")
    _add_corpus_args(p)
    p.add_argument("--backend", help="Simulator backend name in --config (flags are ignored when one is used)")
    p.add_argument("--leakage", type=float, default=0.5)
    p.add_argument("--entity-bias", action="append", metavar="ENTITY=LABEL:RATE")
    p.add_argument("--accuracy", type=float, default=0.9)
    p.add_argument("--order", default="leakage,entity")
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_text in (
        ("calibrate", cmd_calibrate, "Re-score predictions with a calibrator or the consensus rule"),
        ("evaluate", cmd_evaluate, "Compute Bias-SSC, RStd, macro-F1 and OOD"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_corpus_args(p)
        p.add_argument("--predictions", required=True, help="Predictions for originals and variants")
        p.add_argument("--system", default="system", help="Name for the predictor")
        p.add_argument("--model", help="Calibrator model file")
        p.add_argument("--polarity", help="Word-polarity lexicon JSON")
        p.add_argument("--tau", type=float)
        p.add_argument("--output")
        p.set_defaults(func=func)
        if name == "calibrate":
            p.add_argument("--fit-to", help="Fit a calibrator on the corpus and save it here")
        else:
            p.add_argument("--no-ood", action="store_true")
            p.add_argument("--skip-empty-classes", action="store_true")
            p.add_argument("--exclude-neutral", action="store_true")

    p = sub.add_parser("report", help="Render a leaderboard from MetricReport files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="Run the whole pipeline from --config")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.trace else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return 3
    except INPUT_ERRORS as e:
        logger.error("Invalid input: %s", e)
        return 1
    except Exception as e:
        logger.error("Failed: %s", e, exc_info=args.trace)
        return 2


if __name__ == "__main__":
    sys.exit(main())
