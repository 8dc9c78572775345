from collections import Counter

from stancelab.constants import CONSENSUS_BACKEND, STANCE_ORDER
from stancelab.errors import MissingPredictionError
from stancelab.schema import PredictionRecord, StanceLabel


def consensus_fallback(cf_set, preds, tau):
    """
    Rule-based calibration used when no fitted model is available.

    If at least a fraction `tau` of the argmaxes over {original, variants}
    agree, that label wins; otherwise the item is called neutral. The
    majority label is picked by count, then support < against < neutral.

    Args:
        cf_set (CounterfactualSet): Original plus variants.
        preds (mapping or sequence of PredictionRecord): Predictions by example id.
        tau (float): Agreement threshold in (0.5, 1].

    Returns:
        PredictionRecord: One-hot, backend 'consensus'.
    """
    by_id = preds if isinstance(preds, dict) else {r.example_id: r for r in preds}
    labels = []
    for example_id in cf_set.ids:
        record = by_id.get(example_id)
        if record is None or not record.ok:
            raise MissingPredictionError(example_id, "consensus needs a prediction for every set member")
        labels.append(record.argmax)

    counts = Counter(labels)
    label = max(STANCE_ORDER, key=lambda s: (counts[s], -s.index))
    if counts[label] / len(labels) < tau:
        label = StanceLabel.NEUTRAL
    return PredictionRecord.one_hot(cf_set.original.id, label, CONSENSUS_BACKEND)
