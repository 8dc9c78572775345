"""
Calibration features computed from a counterfactual set and its predictions.
"""

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stancelab.constants import FEATURE_NAMES, K, SENTIMENT_TO_STANCE, STANCE_ORDER
from stancelab.counterfactual.spans import mentions_target
from stancelab.errors import ConfigError, CorpusParseError, MissingPredictionError


@dataclass(frozen=True)
class FeatureVector:
    example_id: str
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES):
            raise ValueError(f"Expected {len(FEATURE_NAMES)} features, got {len(self.values)}.")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"Non-finite feature for '{self.example_id}': {self.values}")

    def as_array(self):
        return np.asarray(self.values, dtype=float)

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.values))


def load_polarity_lexicon(path):
    """
    Load a word-polarity lexicon: a JSON object {word: score}, scores in [-1, 1].

    Returns:
        dict: NFC, casefolded word -> float score.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusParseError(path, e.lineno, e.msg) from e
    if not isinstance(raw, dict):
        raise ConfigError(f"The polarity lexicon {path} must be a JSON object of word -> score.")
    lexicon = {}
    for word, score in raw.items():
        if not isinstance(score, (int, float)) or not -1.0 <= score <= 1.0:
            raise ConfigError(f"Polarity for '{word}' in {path} must be a number in [-1, 1], got {score!r}.")
        lexicon[unicodedata.normalize("NFC", word).casefold()] = float(score)
    return lexicon


def rationale_polarity(rationale, polarity):
    """
    Count-weighted mean polarity of lexicon words found in the rationale.

    Words are matched as substrings so unsegmented Thai text works. Returns
    0.0 without a lexicon, rationale or match.
    """
    if not rationale or not polarity:
        return 0.0
    text = rationale.casefold()
    total = 0.0
    hits = 0
    for word, score in polarity.items():
        count = text.count(word)
        total += score * count
        hits += count
    return float(np.clip(total / hits, -1.0, 1.0)) if hits else 0.0


def _one_hot(index):
    vec = [0.0] * K
    vec[index] = 1.0
    return vec


def _record(by_id, example_id):
    record = by_id.get(example_id)
    if record is None:
        raise MissingPredictionError(example_id)
    if not record.ok:
        raise MissingPredictionError(example_id, "prediction failed")
    return record


def extract_features(cf_set, preds, lexicon, polarity=None):
    """
    Build the calibration features for one original example.

    Args:
        cf_set (CounterfactualSet): Original plus its entity-swapped variants.
        preds (mapping or sequence of PredictionRecord): Must cover the
            original and every variant.
        lexicon (sequence of EntityEntry): Used to spot the target in the rationale.
        polarity (dict, optional): Word-polarity lexicon; rationale_polarity is 0 without it.

    Returns:
        FeatureVector

    Raises:
        MissingPredictionError: If any member of the set has no usable prediction.
    """
    by_id = preds if isinstance(preds, dict) else {r.example_id: r for r in preds}
    original = cf_set.original
    base = _record(by_id, original.id)
    variant_labels = [_record(by_id, v.example.id).argmax for v in cf_set.variants]

    labels = [base.argmax] + variant_labels
    histogram = [labels.count(label) / len(labels) for label in STANCE_ORDER]
    flip_rate = (
        sum(label is not base.argmax for label in variant_labels) / len(variant_labels) if variant_labels else 0.0
    )
    mentions = bool(original.rationale) and mentions_target(original.rationale, lexicon, original.target_id)

    values = (
        _one_hot(base.argmax.index)
        + _one_hot(original.sentiment.index)
        + [float(base.argmax is SENTIMENT_TO_STANCE[original.sentiment])]
        + [flip_rate]
        + histogram
        + [float(mentions)]
        + [rationale_polarity(original.rationale, polarity)]
        + [1.0]
    )
    return FeatureVector(original.id, tuple(values))


def feature_matrix(features):
    """Stack FeatureVectors into an (n, d) array."""
    if not features:
        return np.zeros((0, len(FEATURE_NAMES)))
    return np.vstack([f.as_array() for f in features])
