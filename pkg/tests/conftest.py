import pytest

from stancelab.config import bundled_data_path
from stancelab.io import load_corpus, load_lexicon
from stancelab.schema import Corpus, EntityEntry, Example, SentimentLabel, StanceLabel


def make_example(example_id, text, target_id="pita", stance="support", sentiment="positive", rationale=None):
    return Example(
        id=example_id,
        text=text,
        target_id=target_id,
        stance=StanceLabel(stance),
        sentiment=SentimentLabel(sentiment),
        rationale=rationale,
    )


@pytest.fixture
def political_lexicon():
    return (
        EntityEntry("pita", "Pita", ("Pita", "Pita Limjaroenrat", "พิธา"),
                    {"subject": "he", "object": "him", "possessive": "his"}, "Move Forward"),
        EntityEntry("thaksin", "Thaksin", ("Thaksin", "Thaksin Shinawatra", "ทักษิณ"),
                    {"subject": "he", "object": "him", "possessive": "his"}),
        EntityEntry("paetongtarn", "Paetongtarn", ("Paetongtarn", "Paetongtarn Shinawatra", "Shinawatra", "แพทองธาร"),
                    {"subject": "she", "object": "her", "possessive": "her"}),
    )


@pytest.fixture
def bundled_paths():
    return {
        "corpus": bundled_data_path("synthetic_corpus.jsonl"),
        "lexicon": bundled_data_path("lexicon.json"),
        "polarity": bundled_data_path("polarity.json"),
        "config": bundled_data_path("pipeline.json"),
    }


@pytest.fixture
def bundled_corpus(bundled_paths):
    return load_corpus(bundled_paths["corpus"], bundled_paths["lexicon"])


@pytest.fixture
def bundled_lexicon(bundled_paths):
    return load_lexicon(bundled_paths["lexicon"])


@pytest.fixture
def tiny_corpus(political_lexicon):
    """Three examples per entity: support, against and neutral."""
    examples = []
    for entry in political_lexicon:
        name = entry.canonical
        examples.append(make_example(f"{entry.entity_id}-1", f"{name} did a great job.", entry.entity_id,
                                     "support", "positive", f"Praises {name}."))
        examples.append(make_example(f"{entry.entity_id}-2", f"{name} is corrupt.", entry.entity_id,
                                     "against", "negative", f"Criticizes {name}."))
        examples.append(make_example(f"{entry.entity_id}-3", f"{name} met voters today.", entry.entity_id,
                                     "neutral", "neutral"))
    return Corpus(tuple(examples), political_lexicon)


@pytest.fixture
def example_factory():
    return make_example
