from .spans import EntitySpan, find_entity_spans, graphemes
from .substitute import (
    CounterfactualSet,
    CounterfactualVariant,
    augment_corpus,
    canonicalize_mentions,
    generate_counterfactual_set,
    substitute_entity,
)
