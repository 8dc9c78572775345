import numpy as np
import pytest

from stancelab.errors import ConfigError
from stancelab.metrics import bias_ssc, confusion_counts, macro_f1, rstd
from stancelab.schema import StanceLabel
from stancelab.simulator import (
    SimulatorBackend,
    SimulatorConfig,
    expected_distribution,
    make_rng,
    simulate_batch,
    simulate_prediction,
)


def _repeat(corpus, times):
    return [ex for _ in range(times) for ex in corpus]


def test_full_leakage_follows_sentiment(bundled_corpus):
    config = SimulatorConfig(leakage_rate=1.0)
    positives = [ex for ex in bundled_corpus if ex.sentiment.value == "positive"]
    records = simulate_batch(positives, config)
    assert all(r.argmax is StanceLabel.SUPPORT for r in records)
    assert bias_ssc(positives, records) == 100.0


def test_no_bias_perfect_accuracy_is_gold(bundled_corpus):
    config = SimulatorConfig(leakage_rate=0.0, base_accuracy=1.0)
    records = simulate_batch(bundled_corpus, config)
    assert [r.argmax for r in records] == [ex.stance for ex in bundled_corpus]
    counts = confusion_counts(list(bundled_corpus), records)
    assert macro_f1(counts) == 100.0
    assert rstd(counts) == 0.0


def test_same_seed_same_records(bundled_corpus):
    config = SimulatorConfig(leakage_rate=0.3, entity_bias={"anan": ("against", 0.4)}, seed=7)
    assert simulate_batch(bundled_corpus, config) == simulate_batch(bundled_corpus, config)
    assert simulate_batch(bundled_corpus, config) != simulate_batch(bundled_corpus, config.with_seed(8))


def test_forced_entity_bias(bundled_corpus):
    config = SimulatorConfig(leakage_rate=0.0, entity_bias={"anan": ("against", 1.0)})
    records = simulate_batch(bundled_corpus, config)
    for ex, record in zip(bundled_corpus, records):
        if ex.target_id == "anan":
            assert record.argmax is StanceLabel.AGAINST


def test_biased_entity_has_largest_rstd(bundled_corpus):
    config = SimulatorConfig(leakage_rate=0.0, entity_bias={"anan": ("against", 0.6)}, base_accuracy=0.9)
    records = simulate_batch(bundled_corpus, config)
    spreads = {}
    for entity_id in bundled_corpus.entity_ids:
        idx = [i for i, ex in enumerate(bundled_corpus) if ex.target_id == entity_id]
        counts = confusion_counts([bundled_corpus.examples[i] for i in idx], [records[i] for i in idx])
        spreads[entity_id] = rstd(counts)
    assert spreads["anan"] > spreads["busaba"]
    assert spreads["anan"] > spreads["chatchai"]


def test_expected_distribution_cascade(example_factory):
    """
    positive sentiment, gold against, leakage 0.5, pita bias (neutral, 0.4), accuracy 0.9:
    support = 0.5 + 0.3 * 0.05 = 0.515, neutral = 0.5 * 0.4 + 0.3 * 0.05 = 0.215,
    against = 0.3 * 0.9 = 0.27; entity stage first gives (0.315, 0.27, 0.415)
    """
    example = example_factory("x", "Pita.", "pita", "against", "positive")
    config = SimulatorConfig(leakage_rate=0.5, entity_bias={"pita": ("neutral", 0.4)}, base_accuracy=0.9)
    np.testing.assert_allclose(expected_distribution(example, config), [0.515, 0.27, 0.215])

    swapped = SimulatorConfig(leakage_rate=0.5, entity_bias={"pita": ("neutral", 0.4)}, base_accuracy=0.9,
                              order=("entity", "leakage"))
    np.testing.assert_allclose(expected_distribution(example, swapped), [0.315, 0.27, 0.415])


def test_monte_carlo_matches_expected(example_factory):
    example = example_factory("x", "Pita.", "pita", "against", "positive")
    config = SimulatorConfig(leakage_rate=0.5, entity_bias={"pita": ("neutral", 0.4)}, base_accuracy=0.9, seed=3)
    rng = make_rng(config.seed)
    n = 10_000
    draws = [simulate_prediction(example, config, rng).argmax.index for _ in range(n)]
    empirical = np.bincount(draws, minlength=3) / n
    expected = expected_distribution(example, config)
    # 4 binomial standard errors
    assert np.all(np.abs(empirical - expected) < 4 * np.sqrt(expected * (1 - expected) / n))


def test_half_leakage_bias_ssc_matches_cascade(bundled_corpus):
    """
    Stage one fires half the time; it aligns on the 2/3 of items with polar sentiment.
    Gold outputs on this corpus align on 60 of 270 items (support/positive and
    against/negative cells), so expected Bias-SSC = 100 * (0.5 * 2/3 + 0.5 * 60/270).
    """
    examples = _repeat(bundled_corpus, 37)
    records = simulate_batch(examples, SimulatorConfig(leakage_rate=0.5, base_accuracy=1.0, seed=11))
    expected = 100 * (0.5 * 2 / 3 + 0.5 * 60 / 270)
    assert bias_ssc(examples, records) == pytest.approx(expected, abs=2.0)


def test_bias_ssc_monotone_in_leakage(bundled_corpus):
    examples = _repeat(bundled_corpus, 37)
    scores = [
        bias_ssc(examples, simulate_batch(examples, SimulatorConfig(leakage_rate=rate, base_accuracy=1.0, seed=5)))
        for rate in (0.0, 0.5, 1.0)
    ]
    n = len(examples)
    margin = 3 * 100 * np.sqrt(0.25 / n)
    assert scores[0] + margin < scores[1] < scores[2] - margin


def test_backend_wrapper_tags_records(bundled_corpus):
    backend = SimulatorBackend(SimulatorConfig(), name="sim-a")
    records = backend.predict_examples(list(bundled_corpus)[:5])
    assert {r.backend for r in records} == {"sim-a"}


@pytest.mark.parametrize("settings", [
    {"leakage_rate": 1.5},
    {"base_accuracy": -0.1},
    {"entity_bias": {"anan": ("against", 2.0)}},
    {"order": ("leakage",)},
    {"seed": -1},
])
def test_config_validation(settings):
    with pytest.raises(ConfigError):
        SimulatorConfig(**settings)


def test_entity_bias_label_must_be_a_stance():
    with pytest.raises(ValueError):
        SimulatorConfig(entity_bias={"anan": ("angry", 0.5)})
