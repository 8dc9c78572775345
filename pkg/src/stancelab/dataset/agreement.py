"""
Inter-annotator agreement for the stance layer.
"""

from collections import Counter

import numpy as np
from statsmodels.stats.inter_rater import fleiss_kappa as _statsmodels_fleiss_kappa

from stancelab.errors import UndefinedAgreementError
from stancelab.schema import StanceLabel


def rating_table(annotations):
    """
    Items x categories count matrix (categories in stance order).

    Returns:
        numpy.ndarray: shape (n_items, 3), integer counts.
    """
    table = np.zeros((len(annotations.items), len(StanceLabel)), dtype=int)
    for row, (_, labels) in enumerate(annotations.items):
        for label in labels:
            table[row, label.index] += 1
    return table


def fleiss_kappa(annotations):
    """
    Fleiss' kappa over stance labels: (P_bar - P_e) / (1 - P_e).

    Args:
        annotations (AnnotationSet): n annotations per item, n >= 2.

    Returns:
        float: Agreement in [-1, 1]; exactly 1.0 for unanimous items.

    Raises:
        ValueError: Fewer than two annotators or no items.
        UndefinedAgreementError: All annotations fall into one category (P_e = 1).
    """
    if annotations.annotator_count < 2:
        raise ValueError("I need at least two annotators per item to measure agreement.")
    if not annotations.items:
        raise ValueError("I can't measure agreement on an empty annotation set.")

    table = rating_table(annotations)
    if np.any(table.sum(axis=1) != annotations.annotator_count):
        raise ValueError("Every item must carry exactly the same number of annotations.")
    if np.count_nonzero(table.sum(axis=0)) == 1:
        raise UndefinedAgreementError()
    return float(_statsmodels_fleiss_kappa(table, method="fleiss"))


def majority_labels(annotations):
    """
    Resolve each item to the label chosen by a strict majority of annotators.

    Returns:
        dict: item_id -> StanceLabel, or None where no label has a strict majority.
    """
    resolved = {}
    for item_id, labels in annotations.items:
        label, count = Counter(labels).most_common(1)[0] if labels else (None, 0)
        resolved[item_id] = label if count * 2 > len(labels) else None
    return resolved
