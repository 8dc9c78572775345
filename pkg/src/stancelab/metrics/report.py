import logging
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd

from stancelab.errors import UndefinedMetricError
from stancelab.metrics.classification import empty_classes, macro_f1
from stancelab.metrics.confusion import align_predictions, confusion_counts
from stancelab.metrics.fairness import bias_ssc, cf_consistency, rstd

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("bias_ssc", "rstd", "macro_f1")


@dataclass
class MetricReport:
    """Headline and per-entity scores for one predictor, all percentages."""
    system: str
    bias_ssc: Optional[float]
    rstd: Optional[float]
    macro_f1: Optional[float]
    n_scored: int
    n_failed: int
    ood_macro_f1: Optional[float] = None
    ood_per_entity: dict = field(default_factory=dict)
    cf_consistency: Optional[float] = None
    per_entity_breakdown: dict = field(default_factory=dict)
    confusion: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "system": self.system,
            "bias_ssc": self.bias_ssc,
            "rstd": self.rstd,
            "macro_f1": self.macro_f1,
            "ood_macro_f1": self.ood_macro_f1,
            "ood_per_entity": dict(self.ood_per_entity),
            "cf_consistency": self.cf_consistency,
            "n_scored": self.n_scored,
            "n_failed": self.n_failed,
            "per_entity_breakdown": {k: dict(v) for k, v in self.per_entity_breakdown.items()},
            "confusion": self.confusion,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(
            system=raw["system"],
            bias_ssc=raw.get("bias_ssc"),
            rstd=raw.get("rstd"),
            macro_f1=raw.get("macro_f1"),
            n_scored=raw.get("n_scored", 0),
            n_failed=raw.get("n_failed", 0),
            ood_macro_f1=raw.get("ood_macro_f1"),
            ood_per_entity=raw.get("ood_per_entity", {}),
            cf_consistency=raw.get("cf_consistency"),
            per_entity_breakdown=raw.get("per_entity_breakdown", {}),
            confusion=raw.get("confusion", []),
            flags=raw.get("flags", []),
        )

    def per_entity_frame(self):
        """Per-entity breakdown as a DataFrame indexed by entity_id."""
        frame = pd.DataFrame.from_dict(self.per_entity_breakdown, orient="index", columns=list(METRIC_COLUMNS))
        frame.index.name = "entity_id"
        return frame

    def to_table(self):
        """Human-readable summary table."""
        rows = [
            ("Bias-SSC", self.bias_ssc),
            ("RStd", self.rstd),
            ("Macro-F1", self.macro_f1),
            ("OOD", self.ood_macro_f1),
            ("CF consistency", self.cf_consistency),
        ]
        lines = [f"{self.system}  (scored={self.n_scored}, failed={self.n_failed})"]
        lines += [f"  {name:<15}{'–' if value is None else f'{value:6.2f}'}" for name, value in rows]
        if self.per_entity_breakdown:
            lines.append("")
            lines.append(self.per_entity_frame().round(2).to_string(na_rep="–"))
        if self.flags:
            lines.append("")
            lines += [f"  ! {flag}" for flag in self.flags]
        return "\n".join(lines)


def _try(metric, flags, scope):
    try:
        return metric()
    except UndefinedMetricError as e:
        flags.append(f"{scope}: {e}")
        return None


def _scores(examples, preds, skip_empty_classes, exclude_neutral, flags, scope):
    counts = confusion_counts(examples, preds)
    if skip_empty_classes and empty_classes(counts):
        flags.append(f"{scope}: macro_f1 averaged without empty class(es) {[c.value for c in empty_classes(counts)]}")
    return counts, {
        "bias_ssc": _try(lambda: bias_ssc(examples, preds, exclude_neutral=exclude_neutral), flags, scope),
        "rstd": _try(lambda: rstd(counts), flags, scope),
        "macro_f1": _try(lambda: macro_f1(counts, skip_empty_classes=skip_empty_classes), flags, scope),
    }


def evaluate_predictions(
    examples,
    predictions,
    system,
    entity_ids=None,
    cf_sets=None,
    skip_empty_classes=False,
    exclude_neutral=False,
):
    """
    Score one predictor on a set of examples.

    Pooled metrics are the headline; the per-entity breakdown repeats them on
    each target's slice. A metric that is undefined on some slice is reported
    as None and explained in `flags` rather than aborting the report.

    Args:
        examples (sequence of Example): Gold-labeled items (originals).
        predictions (sequence of PredictionRecord): Any order; matched by id.
        system (str): Row name.
        entity_ids (list of str, optional): Entities for the breakdown, in order.
        cf_sets (iterable of CounterfactualSet, optional): Adds cf_consistency.
        skip_empty_classes (bool): Passed to macro_f1.
        exclude_neutral (bool): Passed to bias_ssc.

    Returns:
        MetricReport

    Raises:
        MissingPredictionError: If an example has no prediction record at all.
    """
    examples = list(examples)
    aligned = align_predictions(examples, predictions)
    flags = []
    if exclude_neutral:
        flags.append("bias_ssc excludes neutral-sentiment examples")

    counts, pooled = _scores(examples, aligned, skip_empty_classes, exclude_neutral, flags, "pooled")

    breakdown = {}
    for entity_id in entity_ids or sorted({ex.target_id for ex in examples}):
        idx = [i for i, ex in enumerate(examples) if ex.target_id == entity_id]
        if not idx:
            breakdown[entity_id] = dict.fromkeys(METRIC_COLUMNS)
            flags.append(f"{entity_id}: no examples")
            continue
        _, scores = _scores(
            [examples[i] for i in idx], [aligned[i] for i in idx],
            skip_empty_classes, exclude_neutral, flags, entity_id,
        )
        breakdown[entity_id] = scores

    consistency = None
    if cf_sets is not None:
        consistency = _try(lambda: cf_consistency(cf_sets, predictions), flags, "pooled")

    if counts.failed_count:
        flags.append(f"{counts.failed_count} failed predictions excluded from every denominator")
    logger.info("%s: Bias-SSC=%s RStd=%s Macro-F1=%s", system, pooled["bias_ssc"], pooled["rstd"], pooled["macro_f1"])
    return MetricReport(
        system=system,
        n_scored=counts.n_scored,
        n_failed=counts.failed_count,
        cf_consistency=consistency,
        per_entity_breakdown=breakdown,
        confusion=counts.matrix.tolist(),
        flags=flags,
        **pooled,
    )
