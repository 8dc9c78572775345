"""
Domain types shared by every stancelab module.

All records are frozen dataclasses: a loaded Corpus is immutable and can be
shared freely between readers.
"""

from dataclasses import dataclass, asdict
from enum import Enum
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from stancelab.errors import UnknownEntityError


class StanceLabel(str, Enum):
    SUPPORT = "support"
    AGAINST = "against"
    NEUTRAL = "neutral"

    @property
    def index(self) -> int:
        return _STANCE_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "StanceLabel":
        return list(cls)[int(i)]


class SentimentLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @property
    def index(self) -> int:
        return _SENTIMENT_INDEX[self]


class Provenance(str, Enum):
    ORIGINAL = "original"
    COUNTERFACTUAL = "counterfactual"


_STANCE_INDEX = {label: i for i, label in enumerate(StanceLabel)}
_SENTIMENT_INDEX = {label: i for i, label in enumerate(SentimentLabel)}


@dataclass(frozen=True)
class BiasMarkers:
    sentiment_leakage: bool
    entity_bias: bool


@dataclass(frozen=True)
class Example:
    """One annotated corpus item (original or counterfactual)."""
    id: str
    text: str
    target_id: str
    stance: StanceLabel
    sentiment: SentimentLabel
    rationale: Optional[str] = None
    bias_markers: Optional[BiasMarkers] = None
    provenance: Provenance = Provenance.ORIGINAL
    source_id: Optional[str] = None
    # Counterfactual variants inherit the source stance without re-annotation.
    stance_verified: bool = True

    @property
    def is_original(self) -> bool:
        return self.provenance is Provenance.ORIGINAL

    def to_record(self) -> dict:
        record = {
            "id": self.id,
            "text": self.text,
            "target_id": self.target_id,
            "stance": self.stance.value,
            "sentiment": self.sentiment.value,
            "provenance": self.provenance.value,
        }
        if self.rationale is not None:
            record["rationale"] = self.rationale
        if self.bias_markers is not None:
            record["bias_markers"] = asdict(self.bias_markers)
        if self.source_id is not None:
            record["source_id"] = self.source_id
        if not self.stance_verified:
            record["stance_verified"] = False
        return record


@dataclass(frozen=True)
class EntityEntry:
    entity_id: str
    canonical: str
    aliases: tuple
    pronouns: Mapping[str, str]
    party: Optional[str] = None

    def to_record(self) -> dict:
        record = {
            "entity_id": self.entity_id,
            "canonical": self.canonical,
            "aliases": list(self.aliases),
            "pronouns": dict(self.pronouns),
        }
        if self.party is not None:
            record["party"] = self.party
        return record


def resolve_entity(lexicon: Sequence[EntityEntry], entity_id: str) -> EntityEntry:
    """Look up an entity by id, raising UnknownEntityError if it is absent."""
    for entry in lexicon:
        if entry.entity_id == entity_id:
            return entry
    raise UnknownEntityError(entity_id, known=[e.entity_id for e in lexicon])


@dataclass(frozen=True)
class Corpus:
    examples: tuple
    lexicon: tuple

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    @property
    def ids(self) -> list:
        return [ex.id for ex in self.examples]

    @property
    def entity_ids(self) -> list:
        return [entry.entity_id for entry in self.lexicon]

    def entity(self, entity_id: str) -> EntityEntry:
        return resolve_entity(self.lexicon, entity_id)

    def get(self, example_id: str) -> Example:
        for ex in self.examples:
            if ex.id == example_id:
                return ex
        raise KeyError(example_id)

    def subset(self, keep: Callable[[Example], bool]) -> "Corpus":
        """Filtered copy that preserves load order and shares the lexicon."""
        return Corpus(tuple(ex for ex in self.examples if keep(ex)), self.lexicon)

    def originals(self) -> "Corpus":
        return self.subset(lambda ex: ex.is_original)


@dataclass(frozen=True)
class AnnotationSet:
    items: tuple  # of (item_id, tuple of StanceLabel)
    annotator_count: int


@dataclass(frozen=True)
class PredictionRecord:
    """
    One predictor output. Failed records have no distribution and are kept
    only so they can be counted, never scored.
    """
    example_id: str
    distribution: Optional[tuple]
    argmax: Optional[StanceLabel]
    backend: str
    prompt_hash: str = ""
    raw_response: Optional[str] = None
    status: str = "ok"
    error: Optional[str] = None

    def __post_init__(self):
        if self.status == "failed":
            return
        if self.status != "ok":
            raise ValueError(f"Unknown prediction status '{self.status}'.")
        dist = np.asarray(self.distribution, dtype=float)
        if dist.shape != (3,) or np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
            raise ValueError(f"Prediction for '{self.example_id}' is not a distribution over 3 stances: {self.distribution}")
        if self.argmax is not StanceLabel.from_index(np.argmax(dist)):
            raise ValueError(f"Prediction for '{self.example_id}' has argmax {self.argmax} inconsistent with {self.distribution}")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def from_distribution(cls, example_id, distribution, backend, **kwargs) -> "PredictionRecord":
        dist = tuple(float(p) for p in distribution)
        return cls(example_id, dist, StanceLabel.from_index(np.argmax(dist)), backend, **kwargs)

    @classmethod
    def one_hot(cls, example_id, label: StanceLabel, backend, **kwargs) -> "PredictionRecord":
        dist = [0.0, 0.0, 0.0]
        dist[label.index] = 1.0
        return cls(example_id, tuple(dist), label, backend, **kwargs)

    @classmethod
    def failed(cls, example_id, backend, error, **kwargs) -> "PredictionRecord":
        return cls(example_id, None, None, backend, status="failed", error=str(error), **kwargs)

    def to_record(self) -> dict:
        record = {"example_id": self.example_id, "backend": self.backend, "status": self.status}
        if self.ok:
            record["label"] = self.argmax.value
            record["distribution"] = list(self.distribution)
        else:
            record["error"] = self.error
        if self.prompt_hash:
            record["prompt_hash"] = self.prompt_hash
        if self.raw_response is not None:
            record["raw_response"] = self.raw_response
        return record


def index_predictions(records: Sequence[PredictionRecord]) -> dict:
    """Map example_id -> record; later records win."""
    return {r.example_id: r for r in records}
