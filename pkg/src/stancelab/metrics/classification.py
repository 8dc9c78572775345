import warnings

import numpy as np

from stancelab.constants import STANCE_ORDER
from stancelab.errors import UndefinedMetricError


def per_class_f1(counts):
    """
    F1 per class from a confusion table.

    A class with TP = 0 and some FP or FN scores 0; a class absent from both
    gold and predictions (TP = FP = FN = 0) is NaN.

    Returns:
        numpy.ndarray: shape (3,), support/against/neutral order.
    """
    tp = counts.true_positives.astype(float)
    fp = counts.predicted_totals - tp
    fn = counts.gold_totals - tp
    denom = 2 * tp + fp + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        # 2PR/(P+R) simplifies to 2TP / (2TP + FP + FN)
        return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1.0), np.nan)


def macro_f1(counts, skip_empty_classes=False):
    """
    Mean per-class F1 over the three stance labels, x100.

    Args:
        counts (ConfusionCounts): Confusion table.
        skip_empty_classes (bool): Average over the defined classes only,
            with a warning, instead of raising.

    Returns:
        float: Percentage in [0, 100].

    Raises:
        UndefinedMetricError: If a class is empty and skipping is off.
    """
    f1 = per_class_f1(counts)
    empty = [label.value for label, value in zip(STANCE_ORDER, f1) if np.isnan(value)]
    if empty:
        if not skip_empty_classes:
            raise UndefinedMetricError("macro_f1", f"undefined class(es) {empty}: absent from gold and predictions")
        if len(empty) == len(STANCE_ORDER):
            raise UndefinedMetricError("macro_f1", "no class has any gold item or prediction")
        warnings.warn(f"Skipping empty class(es) {empty} when averaging macro-F1.")
    return float(np.nanmean(f1) * 100.0)


def empty_classes(counts):
    """Labels with TP = FP = FN = 0."""
    return [label for label, value in zip(STANCE_ORDER, per_class_f1(counts)) if np.isnan(value)]
