import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import regex
from tqdm.auto import tqdm

from stancelab.calibration import CounterfactualCalibrator, calibrate_all, fit_calibrator, load_polarity_lexicon
from stancelab.calibration.rescorer import TrainConfig
from stancelab.constants import CALIBRATED_BACKEND, DEFAULT_TAU
from stancelab.counterfactual import augment_corpus
from stancelab.dataset import balance_report
from stancelab.io import load_corpus, save_corpus, save_predictions
from stancelab.io.jsonl import write_json
from stancelab.metrics import evaluate_predictions, ood_evaluate
from stancelab.predictor import ResponseCache, build_backend, load_template, predict_batch
from stancelab.report import per_entity_table, render_leaderboard, row_from_report

logger = logging.getLogger(__name__)

ARTIFACTS = {
    "balance": "balance.json",
    "augmented": "augmented_corpus.jsonl",
    "summary": "summary.json",
    "leaderboard_md": "leaderboard.md",
    "leaderboard_csv": "leaderboard.csv",
    "per_entity": "per_entity.csv",
}


def slug(name):
    """File-name-safe version of a system name."""
    return regex.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "system"


def calibrated_name(system):
    return f"{CALIBRATED_BACKEND} ({system})"


class StanceLab:
    """
    Core class for a stance-bias audit.
    Holds one corpus, its counterfactual sets and every predictor's outputs,
    and computes metrics, calibration and leaderboards over them.
    """

    def __init__(self, corpus, polarity=None, train_config=None, tau=DEFAULT_TAU,
                 skip_empty_classes=False, exclude_neutral=False):
        """
        Args:
            corpus (Corpus): Validated corpus (originals; counterfactuals are generated).
            polarity (dict, optional): Word-polarity lexicon for rationale features.
            train_config (TrainConfig, optional): Re-scorer training settings.
            tau (float): Consensus threshold.
            skip_empty_classes (bool): Average macro-F1 over defined classes only.
            exclude_neutral (bool): Leave neutral-sentiment items out of Bias-SSC.
        """
        if not len(corpus):
            raise ValueError("I can't audit an empty corpus! Please load some examples first.")
        self.corpus = corpus
        self.polarity = polarity
        self.train_config = train_config or TrainConfig()
        self.tau = tau
        self.skip_empty_classes = skip_empty_classes
        self.exclude_neutral = exclude_neutral

        self.augmented = None
        self.cf_sets = {}
        self.predictions = {}  # system -> list of PredictionRecord
        self.models = {}  # system -> CalibratorModel
        self.reports = {}  # system -> MetricReport

    @classmethod
    def from_files(cls, corpus_path, lexicon_path, polarity_path=None, **kwargs):
        polarity = load_polarity_lexicon(polarity_path) if polarity_path else None
        return cls(load_corpus(corpus_path, lexicon_path), polarity=polarity, **kwargs)

    @property
    def originals(self):
        return self.corpus.originals()

    def balance(self, tolerance=0):
        report = balance_report(self.originals, tolerance=tolerance)
        if not report.balanced:
            warnings.warn(f"The corpus is not balanced for targets {report.imbalanced_targets}.")
        return report

    def generate_counterfactuals(self, strict=False):
        """Build counterfactual sets for every original example."""
        self.augmented, self.cf_sets = augment_corpus(self.originals, strict=strict)
        return self.augmented

    def _require_counterfactuals(self):
        if self.augmented is None:
            self.generate_counterfactuals()

    def predict(self, backend, template, config, cache=None):
        """
        Predict every original and variant with one backend.

        Returns:
            list of PredictionRecord, in augmented-corpus order.
        """
        self._require_counterfactuals()
        records = predict_batch(backend, list(self.augmented), template, config, self.corpus.lexicon, cache=cache)
        self.predictions[backend.name] = records
        return records

    def add_predictions(self, system, records):
        self.predictions[system] = list(records)

    def _predictions_for(self, system):
        if system not in self.predictions:
            raise ValueError(
                f"I couldn't find predictions for '{system}'. I only have these: {list(self.predictions)}."
            )
        return self.predictions[system]

    def calibrator(self, system):
        self._require_counterfactuals()
        return CounterfactualCalibrator(
            self.cf_sets, self._predictions_for(system), self.corpus.lexicon,
            config=self.train_config, polarity=self.polarity, tau=self.tau,
        )

    def fit(self, system, fit_set=None):
        """Fit a calibrator on `fit_set` (default: all originals) for one system's predictions."""
        self._require_counterfactuals()
        model = fit_calibrator(
            fit_set if fit_set is not None else self.originals, self.cf_sets, self._predictions_for(system),
            self.train_config, self.corpus.lexicon, self.polarity, self.tau,
        )
        model.metadata["backend"] = system
        self.models[system] = model
        return model

    def calibrate(self, system, model=None):
        """
        Re-score a system's predictions on the originals. Without a model the
        consensus rule is used.
        """
        self._require_counterfactuals()
        records = calibrate_all(
            list(self.originals), self.cf_sets, self._predictions_for(system), self.corpus.lexicon,
            model=model, polarity=self.polarity, tau=self.tau,
        )
        self.predictions[calibrated_name(system)] = records
        return records

    def evaluate(self, system, ood=True, calibrated_from=None):
        """
        Score one system on the original examples.

        Args:
            system (str): Name of stored predictions.
            ood (bool): Also run leave-one-entity-out.
            calibrated_from (str, optional): Base system whose calibrator is
                refit per OOD fold; when None, OOD scores the stored predictions.

        Returns:
            MetricReport
        """
        self._require_counterfactuals()
        report = evaluate_predictions(
            list(self.originals),
            self._predictions_for(system),
            system,
            entity_ids=self.corpus.entity_ids,
            cf_sets=None if calibrated_from else list(self.cf_sets.values()),
            skip_empty_classes=self.skip_empty_classes,
            exclude_neutral=self.exclude_neutral,
        )
        if calibrated_from and not self.polarity:
            report.flags.append("rationale_polarity fixed at 0 (no polarity lexicon)")
        if ood and len(self.corpus.lexicon) >= 2:
            if calibrated_from:
                result = ood_evaluate(self.originals, [], self.calibrator(calibrated_from), self.skip_empty_classes)
            else:
                result = ood_evaluate(self.originals, self._predictions_for(system),
                                      skip_empty_classes=self.skip_empty_classes)
            report.ood_macro_f1 = result.mean
            report.ood_per_entity = result.per_entity
            report.flags.extend(f"ood {flag}" for flag in result.flags)
        self.reports[system] = report
        return report

    def leaderboard(self, fmt="markdown", systems=None):
        systems = systems or list(self.reports)
        return render_leaderboard([row_from_report(self.reports[s]) for s in systems], fmt)


@dataclass
class PipelineResult:
    reports: list
    artifacts: dict = field(default_factory=dict)


def run_pipeline(config):
    """
    Run validate -> generate-cf -> predict -> fit/calibrate -> evaluate -> report.

    Every intermediate artifact is written under config.output_dir with sorted
    keys and no timestamps, so a rerun on a warm cache is byte-identical. The
    first failing stage raises; artifacts already written stay on disk.

    Args:
        config (PipelineConfig): Loaded pipeline configuration.

    Returns:
        PipelineResult
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {}

    logger.info("Stage validate: %s", config.corpus)
    polarity = load_polarity_lexicon(config.polarity_lexicon) if config.polarity_lexicon else None
    if polarity is None:
        warnings.warn("No polarity lexicon configured; the rationale_polarity feature will be 0.")
    lab = StanceLab(
        load_corpus(config.corpus, config.lexicon), polarity=polarity, train_config=config.train, tau=config.tau,
        skip_empty_classes=config.skip_empty_classes, exclude_neutral=config.bias_ssc_exclude_neutral,
    )
    artifacts["balance"] = write_json(out / ARTIFACTS["balance"], lab.balance().to_dict())

    logger.info("Stage generate-cf")
    artifacts["augmented"] = save_corpus(lab.generate_counterfactuals(), out / ARTIFACTS["augmented"])

    template = load_template(config.template, config.templates_dir)
    systems = []
    for spec in tqdm(config.backends, desc="Backends", disable=None):
        name = spec.name
        logger.info("Stage predict: %s", name)
        backend = build_backend(spec.predictor, predictions_path=spec.predictions, simulator_config=spec.simulator)
        cache = None
        if getattr(backend, "is_remote", False):
            cache = ResponseCache(spec.predictor.cache_path or out / "cache" / f"{slug(name)}.jsonl")
        records = lab.predict(backend, template, spec.predictor, cache=cache)
        artifacts[f"predictions:{name}"] = save_predictions(records, out / "predictions" / f"{slug(name)}.jsonl")

        logger.info("Stage fit/calibrate: %s", name)
        model = lab.fit(name)
        artifacts[f"model:{name}"] = model.save(out / "models" / f"{slug(name)}.json")
        calibrated = lab.calibrate(name, model)
        cal_name = calibrated_name(name)
        artifacts[f"predictions:{cal_name}"] = save_predictions(
            calibrated, out / "predictions" / f"{slug(cal_name)}.jsonl"
        )

        logger.info("Stage evaluate: %s", name)
        systems.append(lab.evaluate(name))
        systems.append(lab.evaluate(cal_name, calibrated_from=name))
        for report in systems[-2:]:
            artifacts[f"report:{report.system}"] = write_json(
                out / "reports" / f"{slug(report.system)}.json", report.to_dict()
            )

    logger.info("Stage report")
    names = [r.system for r in systems]
    artifacts["leaderboard_md"] = _write_text(out / ARTIFACTS["leaderboard_md"], lab.leaderboard("markdown", names))
    artifacts["leaderboard_csv"] = _write_text(out / ARTIFACTS["leaderboard_csv"], lab.leaderboard("csv", names))
    table = per_entity_table(systems)
    artifacts["per_entity"] = out / ARTIFACTS["per_entity"]
    table.to_csv(artifacts["per_entity"], index=False, lineterminator="\r\n")
    artifacts["summary"] = write_json(
        out / ARTIFACTS["summary"], {"systems": [r.to_dict() for r in systems], "seed": config.seed}
    )
    return PipelineResult(reports=systems, artifacts=artifacts)


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
