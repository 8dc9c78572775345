import logging
import warnings
from dataclasses import dataclass, replace

from stancelab.counterfactual.spans import EntitySpan, find_entity_spans, graphemes, is_latin
from stancelab.errors import NoMentionError
from stancelab.schema import Corpus, Provenance, resolve_entity

logger = logging.getLogger(__name__)

_SENTENCE_END = {".", "!", "?", "\n"}


@dataclass(frozen=True)
class CounterfactualVariant:
    example: object
    swapped_from: str
    swapped_to: str
    edited_spans: tuple  # offsets in the original text
    variant_spans: tuple  # offsets of the replacements in the variant text


@dataclass(frozen=True)
class CounterfactualSet:
    original: object
    variants: tuple

    @property
    def examples(self):
        return [self.original] + [v.example for v in self.variants]

    @property
    def ids(self):
        return [ex.id for ex in self.examples]


def variant_id(source_id, to):
    return f"{source_id}::{to}"


def _sentence_initial(g, start):
    i = start - 1
    while i >= 0 and g[i].isspace() and g[i] != "\n":
        i -= 1
    return i < 0 or g[i] in _SENTENCE_END


def _match_case(matched, replacement):
    if len(matched) > 1 and matched.isupper():
        return replacement.upper()
    if matched[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    if matched.islower():
        return replacement.lower()
    return replacement


def _replacement(span, g, dest):
    if span.is_alias:
        text = dest.canonical
        if _sentence_initial(g, span.start) and is_latin(text[:1]) and text[:1].islower():
            text = text[:1].upper() + text[1:]
        return text
    slot = span.kind.removeprefix("pronoun_")
    return _match_case(span.matched_alias, dest.pronouns[slot])


def _rewrite(text, spans, dest):
    """
    Replace every span with dest's canonical name or pronoun; all other
    graphemes are copied unchanged.

    Returns:
        tuple: (new_text, spans of the replacements in new_text)
    """
    g = graphemes(text)
    out = []
    new_spans = []
    pos = 0
    for span in spans:
        out.extend(g[pos:span.start])
        replacement = _replacement(span, g, dest)
        start = len(out)
        out.extend(graphemes(replacement))
        new_spans.append(EntitySpan(start, len(out), replacement, dest.entity_id, span.kind))
        pos = span.end
    out.extend(g[pos:])
    return "".join(out), tuple(new_spans)


def substitute_entity(example, lexicon, to):
    """
    Swap the example's target entity for another one.

    Alias mentions become `to`'s canonical name, pronouns go through `to`'s
    pronoun map slot by slot, and everything else is byte-identical. The
    rationale is rewritten the same way when it names the target. Labels are
    copied but the stance is flagged as unverified.

    Args:
        example (Example): An original-provenance example.
        lexicon (sequence of EntityEntry): Entity lexicon.
        to (str): entity_id to swap in.

    Returns:
        CounterfactualVariant

    Raises:
        UnknownEntityError: If `to` or the example's target is not in the lexicon.
        NoMentionError: If the text has no alias mention of the target.
        ValueError: For counterfactual inputs or identity swaps.
    """
    if not example.is_original:
        raise ValueError(f"I only swap entities in original examples; '{example.id}' is already a counterfactual.")
    resolve_entity(lexicon, example.target_id)
    dest = resolve_entity(lexicon, to)
    if to == example.target_id:
        raise ValueError(f"Swapping '{example.id}' to its own target '{to}' would not change anything.")

    spans = find_entity_spans(example.text, lexicon, example.target_id)
    if not any(span.is_alias for span in spans):
        raise NoMentionError(example.id, example.target_id)
    text, new_spans = _rewrite(example.text, spans, dest)

    rationale = example.rationale
    if rationale:
        rationale_spans = find_entity_spans(rationale, lexicon, example.target_id)
        if any(span.is_alias for span in rationale_spans):
            rationale, _ = _rewrite(rationale, rationale_spans, dest)

    swapped = replace(
        example,
        id=variant_id(example.id, to),
        text=text,
        target_id=to,
        rationale=rationale,
        provenance=Provenance.COUNTERFACTUAL,
        source_id=example.id,
        stance_verified=False,
    )
    return CounterfactualVariant(
        example=swapped,
        swapped_from=example.target_id,
        swapped_to=to,
        edited_spans=tuple(spans),
        variant_spans=new_spans,
    )


def canonicalize_mentions(example, lexicon):
    """Rewrite every alias mention of the target to its canonical name."""
    entry = resolve_entity(lexicon, example.target_id)
    spans = [s for s in find_entity_spans(example.text, lexicon, example.target_id) if s.is_alias]
    text, _ = _rewrite(example.text, spans, entry)
    return replace(example, text=text)


def generate_counterfactual_set(example, lexicon, strict=True):
    """
    Build one variant per other entity in the lexicon (lexicon order).

    Args:
        example (Example): Original example that mentions its target.
        lexicon (sequence of EntityEntry): Entity lexicon.
        strict (bool): If False, an example without a mention yields a set
            with no variants (and a warning) instead of raising.

    Returns:
        CounterfactualSet
    """
    try:
        variants = tuple(
            substitute_entity(example, lexicon, entry.entity_id)
            for entry in lexicon
            if entry.entity_id != example.target_id
        )
    except NoMentionError:
        if strict:
            raise
        warnings.warn(f"Example '{example.id}' doesn't mention '{example.target_id}'; no counterfactuals for it.")
        variants = ()
    return CounterfactualSet(original=example, variants=variants)


def augment_corpus(corpus, strict=False):
    """
    Generate counterfactual sets for every original example.

    Returns:
        tuple: (augmented Corpus with each original immediately followed by
        its variants, dict of original id -> CounterfactualSet)
    """
    sets = {}
    interleaved = []
    skipped = 0
    for example in corpus:
        if not example.is_original:
            skipped += 1
            continue
        cf_set = generate_counterfactual_set(example, corpus.lexicon, strict=strict)
        sets[example.id] = cf_set
        interleaved.extend(cf_set.examples)
    if skipped:
        logger.warning("Ignored %d counterfactual records already present in the input corpus", skipped)
    logger.info("Generated %d counterfactual variants for %d originals",
                len(interleaved) - len(sets), len(sets))
    return Corpus(tuple(interleaved), corpus.lexicon), sets
