"""
Synthetic stance predictor with two controllable bias mechanisms.

Each prediction walks a cascade of stages drawn from one seeded PCG64
stream:

- leakage: with probability `leakage_rate` emit the sentiment-mapped stance
  (positive -> support, negative -> against, neutral -> neutral);
- entity: with the target's `bias_rate` emit its configured biased label;
- otherwise emit gold with probability `base_accuracy`, else one of the two
  other labels uniformly.

A stage only consumes a random draw when it is reached, so the stream is a
pure function of (corpus order, config).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from stancelab.constants import SENTIMENT_TO_STANCE, SIMULATOR_BACKEND, STANCE_ORDER
from stancelab.errors import ConfigError
from stancelab.schema import PredictionRecord, StanceLabel

logger = logging.getLogger(__name__)

STAGES = ("leakage", "entity")


def _check_rate(name, value):
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be in [0, 1], got {value}.")


@dataclass(frozen=True)
class SimulatorConfig:
    leakage_rate: float = 0.5
    entity_bias: dict = field(default_factory=dict)  # entity_id -> (StanceLabel, rate)
    base_accuracy: float = 0.9
    seed: int = 0
    order: tuple = STAGES

    def __post_init__(self):
        _check_rate("leakage_rate", self.leakage_rate)
        _check_rate("base_accuracy", self.base_accuracy)
        normalized = {}
        for entity_id, (label, rate) in self.entity_bias.items():
            _check_rate(f"entity_bias[{entity_id}] rate", rate)
            normalized[entity_id] = (StanceLabel(label), float(rate))
        object.__setattr__(self, "entity_bias", normalized)
        if sorted(self.order) != sorted(STAGES):
            raise ConfigError(f"Cascade order must be a permutation of {list(STAGES)}, got {list(self.order)}.")
        object.__setattr__(self, "order", tuple(self.order))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}.")

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        if "entity_bias" in raw:
            raw["entity_bias"] = {k: tuple(v) for k, v in raw["entity_bias"].items()}
        if "order" in raw:
            raw["order"] = tuple(raw["order"])
        return cls(**raw)

    def with_seed(self, seed):
        return SimulatorConfig(self.leakage_rate, dict(self.entity_bias), self.base_accuracy, seed, self.order)


def make_rng(seed):
    """The one generator every simulation uses: numpy PCG64."""
    return np.random.Generator(np.random.PCG64(seed))


def _stage_label(stage, example, config):
    """(probability, label) for a bias stage, or None when it cannot fire."""
    if stage == "leakage":
        return config.leakage_rate, SENTIMENT_TO_STANCE[example.sentiment]
    bias = config.entity_bias.get(example.target_id)
    if bias is None:
        return None
    label, rate = bias
    return rate, label


def simulate_label(example, config, rng):
    for stage in config.order:
        stage_label = _stage_label(stage, example, config)
        if stage_label is None:
            continue
        rate, label = stage_label
        if rng.random() < rate:
            return label
    if rng.random() < config.base_accuracy:
        return example.stance
    others = [label for label in STANCE_ORDER if label is not example.stance]
    return others[int(rng.integers(2))]


def simulate_prediction(example, config, rng):
    """
    Draw one biased prediction for an example.

    Args:
        example (Example): Item to predict; only sentiment, target and gold stance are read.
        config (SimulatorConfig): Bias rates and cascade order.
        rng (numpy.random.Generator): Shared seeded stream, advanced in place.

    Returns:
        PredictionRecord: One-hot record with backend 'simulator'.
    """
    return PredictionRecord.one_hot(example.id, simulate_label(example, config, rng), SIMULATOR_BACKEND)


def expected_distribution(example, config):
    """
    Exact probability of each stance under the cascade.

    Returns:
        numpy.ndarray: shape (3,), label order support/against/neutral.
    """
    dist = np.zeros(len(STANCE_ORDER))
    remaining = 1.0
    for stage in config.order:
        stage_label = _stage_label(stage, example, config)
        if stage_label is None:
            continue
        rate, label = stage_label
        dist[label.index] += remaining * rate
        remaining *= 1.0 - rate
    dist[example.stance.index] += remaining * config.base_accuracy
    for label in STANCE_ORDER:
        if label is not example.stance:
            dist[label.index] += remaining * (1.0 - config.base_accuracy) / 2
    return dist


def simulate_batch(corpus, config, name=SIMULATOR_BACKEND):
    """
    Simulate predictions for every example in corpus order on one seeded stream.

    Args:
        corpus (Corpus or sequence of Example): Items to predict.
        config (SimulatorConfig): Simulator settings, including the seed.
        name (str): Backend tag written on each record.

    Returns:
        list of PredictionRecord
    """
    rng = make_rng(config.seed)
    records = [
        PredictionRecord.one_hot(ex.id, simulate_label(ex, config, rng), name)
        for ex in corpus
    ]
    logger.info("Simulated %d predictions (leakage=%.2f, seed=%d)", len(records), config.leakage_rate, config.seed)
    return records


class SimulatorBackend:
    """Predictor-contract wrapper around simulate_batch."""

    is_remote = False

    def __init__(self, config, name=SIMULATOR_BACKEND):
        self.config = config
        self.name = name

    def predict_examples(self, examples):
        return simulate_batch(examples, self.config, name=self.name)
