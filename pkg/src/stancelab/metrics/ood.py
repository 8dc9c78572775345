"""
Leave-one-entity-out generalization: fit on every other target, score the held-out one.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from stancelab.dataset.split import leave_one_entity_out_folds
from stancelab.errors import FieldError, UndefinedMetricError, ValidationError
from stancelab.metrics.classification import macro_f1
from stancelab.metrics.confusion import align_predictions, confusion_counts

logger = logging.getLogger(__name__)


class FoldLeakageError(AssertionError):
    """A held-out example took part in fitting."""


@dataclass
class OODResult:
    per_entity: dict  # entity_id -> macro-F1 (None when undefined)
    mean: Optional[float]
    fold_sizes: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "per_entity": dict(self.per_entity),
            "mean": self.mean,
            "fold_sizes": dict(self.fold_sizes),
            "flags": list(self.flags),
        }


def ood_evaluate(corpus, predictions, calibrator=None, skip_empty_classes=False):
    """
    Macro-F1 on each entity's slice when that entity is unseen during fitting.

    Only original examples are used on either side: counterfactual variants
    carry unverified stance and never act as gold rows.

    Args:
        corpus (Corpus): Corpus with at least two entities.
        predictions (sequence of PredictionRecord): Base predictions by id.
        calibrator (optional): Object with `fit(fit_set) -> model` and
            `predict(model, examples) -> list of PredictionRecord`. When
            absent, base predictions are scored directly.
        skip_empty_classes (bool): Passed to macro_f1.

    Returns:
        OODResult

    Raises:
        ValidationError: If the corpus has fewer than two entities.
        FoldLeakageError: If fit and eval ids overlap in any fold.
    """
    if len(corpus.lexicon) < 2:
        raise ValidationError("<corpus>", [FieldError(
            "lexicon", f"Leave-one-entity-out needs at least two entities, got {corpus.entity_ids}."
        )])
    originals = corpus.originals()
    per_entity = {}
    sizes = {}
    flags = []

    for held_out, fit_set, eval_set in leave_one_entity_out_folds(originals):
        overlap = set(fit_set.ids) & set(eval_set.ids)
        if overlap:
            raise FoldLeakageError(f"Fold '{held_out}': {sorted(overlap)[:5]} appear in both fit and eval slices.")
        sizes[held_out] = len(eval_set)
        if not len(eval_set):
            per_entity[held_out] = None
            flags.append(f"{held_out}: empty held-out slice")
            continue

        if calibrator is not None:
            model = calibrator.fit(fit_set)
            leaked = set(getattr(calibrator, "fitted_ids", ())) & set(eval_set.ids)
            if leaked:
                raise FoldLeakageError(f"Fold '{held_out}': calibrator was fitted on held-out ids {sorted(leaked)[:5]}.")
            fold_preds = calibrator.predict(model, list(eval_set))
        else:
            fold_preds = align_predictions(list(eval_set), predictions)

        counts = confusion_counts(list(eval_set), align_predictions(list(eval_set), fold_preds))
        try:
            per_entity[held_out] = macro_f1(counts, skip_empty_classes=skip_empty_classes)
        except UndefinedMetricError as e:
            per_entity[held_out] = None
            flags.append(f"{held_out}: {e}")
        logger.info("OOD fold %s: fit=%d eval=%d macro-F1=%s", held_out, len(fit_set), len(eval_set), per_entity[held_out])

    defined = [v for v in per_entity.values() if v is not None]
    mean = float(np.mean(defined)) if defined else None
    return OODResult(per_entity=per_entity, mean=mean, fold_sizes=sizes, flags=flags)
