"""
Counterfactual calibration layer: features from matched entity swaps and the
rationale, re-scored by a fitted model or the consensus rule.
"""

import logging
import warnings

import numpy as np

from stancelab.calibration.fallback import consensus_fallback
from stancelab.calibration.features import extract_features, feature_matrix
from stancelab.calibration.rescorer import CalibratorModel, TrainConfig, recall_balancing_offsets, train_weights
from stancelab.constants import CALIBRATED_BACKEND, CONSENSUS_BACKEND, DEFAULT_TAU, FEATURE_NAMES, STANCE_ORDER
from stancelab.counterfactual.substitute import CounterfactualSet
from stancelab.errors import MissingPredictionError
from stancelab.schema import PredictionRecord

logger = logging.getLogger(__name__)


def _index(preds):
    return preds if isinstance(preds, dict) else {r.example_id: r for r in preds}


def _cf_set_for(example, cf_sets):
    return cf_sets.get(example.id) or CounterfactualSet(original=example, variants=())


def fit_calibrator(fit_set, cf_sets, predictions, config=None, lexicon=None, polarity=None, tau=DEFAULT_TAU):
    """
    Fit the re-scorer on gold-labeled original examples.

    Counterfactual variants never become training rows; they only shape
    the features of their source example. With `config.balance_recall` the
    against and neutral intercepts are then shifted so that per-class recall
    on the fit rows is as even as the model allows.

    Args:
        fit_set (Corpus or sequence of Example): Items to fit on (originals are used).
        cf_sets (dict): original id -> CounterfactualSet.
        predictions (mapping or sequence of PredictionRecord): Base predictions
            for originals and variants.
        config (TrainConfig, optional): Defaults to TrainConfig().
        lexicon (sequence of EntityEntry): Entity lexicon.
        polarity (dict, optional): Word-polarity lexicon.
        tau (float): Consensus threshold stored with the model.

    Returns:
        CalibratorModel

    Raises:
        ValueError: If some stance class has no usable fit example.
        CalibrationDivergenceError: From training.
    """
    config = config or TrainConfig()
    if lexicon is None:
        lexicon = fit_set.lexicon
    by_id = _index(predictions)

    features, gold = [], []
    skipped = 0
    for example in fit_set:
        if not example.is_original:
            continue
        try:
            features.append(extract_features(_cf_set_for(example, cf_sets), by_id, lexicon, polarity))
        except MissingPredictionError:
            skipped += 1
            continue
        gold.append(example.stance.index)
    if skipped:
        warnings.warn(f"Skipped {skipped} fit examples without complete counterfactual predictions.")

    missing = [label.value for label in STANCE_ORDER if label.index not in gold]
    if missing:
        raise ValueError(f"I need at least one fit example per stance class, but found none for {missing}.")

    X, y = feature_matrix(features), np.asarray(gold)
    W, metadata = train_weights(X, y, config)
    if config.balance_recall:
        offsets = recall_balancing_offsets(X @ W.T, y)
        W[:, FEATURE_NAMES.index("bias_constant")] += offsets
        metadata["intercept_offsets"] = offsets.tolist()
        logger.info("Recall-balancing intercept shifts: %s", np.round(offsets, 2).tolist())
    metadata["polarity_lexicon"] = bool(polarity)
    return CalibratorModel(weights=W, tau=tau, metadata=metadata)


def calibrate(cf_set, preds, model, lexicon, polarity=None):
    """
    Re-score one original example: softmax(W f).

    Returns:
        PredictionRecord: Tagged with the calibrated backend name.
    """
    vector = extract_features(cf_set, _index(preds), lexicon, polarity)
    distribution = model.predict_proba(vector.as_array())[0]
    return PredictionRecord.from_distribution(cf_set.original.id, distribution, CALIBRATED_BACKEND)


def calibrate_all(examples, cf_sets, preds, lexicon, model=None, polarity=None, tau=DEFAULT_TAU):
    """
    Calibrate every original example, falling back to consensus without a model.

    Examples whose set has a missing or failed prediction get a failed record.
    """
    by_id = _index(preds)
    records = []
    for example in examples:
        if not example.is_original:
            continue
        cf_set = _cf_set_for(example, cf_sets)
        try:
            if model is None:
                record = consensus_fallback(cf_set, by_id, tau)
            else:
                record = calibrate(cf_set, by_id, model, lexicon, polarity)
        except MissingPredictionError as e:
            backend = CALIBRATED_BACKEND if model is not None else CONSENSUS_BACKEND
            records.append(PredictionRecord.failed(example.id, backend, e))
            continue
        records.append(record)
    failed = sum(1 for r in records if not r.ok)
    if failed:
        logger.warning("%d of %d examples could not be calibrated", failed, len(records))
    return records


class CounterfactualCalibrator:
    """
    Bundles everything needed to refit and apply the layer on corpus slices,
    which is the interface ood_evaluate drives.
    """

    def __init__(self, cf_sets, predictions, lexicon, config=None, polarity=None, tau=DEFAULT_TAU):
        self.cf_sets = cf_sets
        self.predictions = _index(predictions)
        self.lexicon = lexicon
        self.config = config or TrainConfig()
        self.polarity = polarity
        self.tau = tau
        self.fitted_ids = set()

    def fit(self, fit_set):
        self.fitted_ids = {ex.id for ex in fit_set}
        return fit_calibrator(
            fit_set, self.cf_sets, self.predictions, self.config, self.lexicon, self.polarity, self.tau
        )

    def predict(self, model, examples):
        return calibrate_all(examples, self.cf_sets, self.predictions, self.lexicon, model, self.polarity, self.tau)
