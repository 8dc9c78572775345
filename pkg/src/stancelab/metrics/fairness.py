"""
Bias metrics: recall spread across stance classes (RStd), sentiment-stance
alignment (Bias-SSC), and agreement across counterfactual entity swaps.
"""

import math
from fractions import Fraction

import numpy as np

from stancelab.constants import ALIGNED_PAIRS, K, STANCE_ORDER
from stancelab.errors import MissingPredictionError, UndefinedMetricError
from stancelab.schema import SentimentLabel


def per_class_recall(counts):
    """TP_i / P_i per class; NaN where the class has no gold items."""
    totals = counts.gold_totals.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(totals > 0, counts.true_positives / np.where(totals > 0, totals, 1.0), np.nan)


def rstd(counts):
    """
    Population standard deviation of the three per-class recalls, x100.

    Recalls are computed on the fraction scale, so the result lies in [0, 50].
    The variance is taken over exact rationals; equal recalls give exactly 0.

    Raises:
        UndefinedMetricError: If some class has no gold items (P_i = 0).
    """
    totals = counts.gold_totals
    for label, total in zip(STANCE_ORDER, totals):
        if total == 0:
            raise UndefinedMetricError("rstd", f"undefined recall for class '{label.value}' (no gold items)")
    recalls = [Fraction(int(tp), int(total)) for tp, total in zip(counts.true_positives, totals)]
    mean = sum(recalls, Fraction(0)) / K
    variance = sum((r - mean) ** 2 for r in recalls) / K
    return 100.0 * math.sqrt(variance)


def bias_ssc(examples, preds, exclude_neutral=False):
    """
    Share of predictions that follow the text's sentiment polarity, x100.

    An item counts when (positive, support) or (negative, against).
    Neutral-sentiment items stay in the denominator and can only add 0,
    unless `exclude_neutral` drops them. Failed predictions are skipped.

    Args:
        examples (list of Example): Items with sentiment labels.
        preds (list of PredictionRecord): Predictions aligned by position and id.
        exclude_neutral (bool): Leave neutral-sentiment items out of N.

    Returns:
        float: Percentage in [0, 100].

    Raises:
        MissingPredictionError: If the lists are not aligned.
        UndefinedMetricError: If no item is left to score.
    """
    examples, preds = list(examples), list(preds)
    if len(examples) != len(preds):
        raise MissingPredictionError("<batch>", f"{len(examples)} examples but {len(preds)} predictions")
    hits = 0
    n = 0
    for ex, record in zip(examples, preds):
        if ex.id != record.example_id:
            raise MissingPredictionError(ex.id, f"aligned prediction is for '{record.example_id}'")
        if not record.ok:
            continue
        if exclude_neutral and ex.sentiment is SentimentLabel.NEUTRAL:
            continue
        n += 1
        hits += (ex.sentiment, record.argmax) in ALIGNED_PAIRS
    if n == 0:
        raise UndefinedMetricError("bias_ssc", "no scored examples")
    return 100.0 * hits / n


def cf_consistency(cf_sets, predictions):
    """
    Percentage of counterfactual sets whose original and variants all share one argmax.

    Sets without variants or with any failed/missing prediction are skipped.

    Raises:
        UndefinedMetricError: If no set can be scored.
    """
    by_id = {r.example_id: r for r in predictions}
    consistent = 0
    scored = 0
    for cf_set in cf_sets:
        if not cf_set.variants:
            continue
        records = [by_id.get(i) for i in cf_set.ids]
        if any(r is None or not r.ok for r in records):
            continue
        scored += 1
        consistent += len({r.argmax for r in records}) == 1
    if scored == 0:
        raise UndefinedMetricError("cf_consistency", "no counterfactual set has complete predictions")
    return 100.0 * consistent / scored
