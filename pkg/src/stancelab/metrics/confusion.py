from dataclasses import dataclass

import numpy as np

from stancelab.constants import K
from stancelab.errors import MissingPredictionError
from stancelab.schema import StanceLabel


@dataclass(frozen=True)
class ConfusionCounts:
    """3x3 counts indexed (gold, predicted) in support/against/neutral order."""
    matrix: np.ndarray
    failed_count: int = 0

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.int64)
        if matrix.shape != (K, K) or np.any(matrix < 0):
            raise ValueError(f"A confusion matrix must be a non-negative {K}x{K} count table, got {self.matrix!r}.")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def empty(cls):
        return cls(np.zeros((K, K), dtype=np.int64))

    @property
    def gold_totals(self):
        """P_i: number of scored gold items per class."""
        return self.matrix.sum(axis=1)

    @property
    def predicted_totals(self):
        return self.matrix.sum(axis=0)

    @property
    def true_positives(self):
        return np.diag(self.matrix)

    @property
    def n_scored(self):
        return int(self.matrix.sum())

    def __add__(self, other):
        return ConfusionCounts(self.matrix + other.matrix, self.failed_count + other.failed_count)

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "failed_count": self.failed_count}


def _gold_pairs(gold, pred):
    """Yield (gold label, record), checking that both sides describe the same examples."""
    if len(gold) != len(pred):
        raise MissingPredictionError(
            "<batch>", f"{len(gold)} gold items but {len(pred)} predictions; the lists must be aligned"
        )
    for item, record in zip(gold, pred):
        if isinstance(item, StanceLabel):
            yield item, record
            continue
        if item.id != record.example_id:
            raise MissingPredictionError(item.id, f"aligned prediction is for '{record.example_id}'")
        yield item.stance, record


def confusion_counts(gold, pred):
    """
    Tabulate gold vs predicted stance.

    Args:
        gold (list of Example or StanceLabel): Gold items. Examples are
            matched to predictions by id; bare labels by position.
        pred (list of PredictionRecord): Predictions aligned with `gold`.

    Returns:
        ConfusionCounts: Failed records are only counted in failed_count.

    Raises:
        MissingPredictionError: If the lists differ in length or ids.
    """
    matrix = np.zeros((K, K), dtype=np.int64)
    failed = 0
    for label, record in _gold_pairs(list(gold), list(pred)):
        if not record.ok:
            failed += 1
            continue
        matrix[label.index, record.argmax.index] += 1
    return ConfusionCounts(matrix, failed)


def align_predictions(examples, predictions):
    """
    Order predictions to match examples by example_id.

    Raises:
        MissingPredictionError: Naming the first example with no prediction.
    """
    by_id = {r.example_id: r for r in predictions}
    aligned = []
    for ex in examples:
        record = by_id.get(ex.id)
        if record is None:
            raise MissingPredictionError(ex.id)
        aligned.append(record)
    return aligned
