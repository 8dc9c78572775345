"""
Entity mention spans on extended grapheme clusters.

Offsets count grapheme clusters, not code points, so Thai combining marks
never end up split across a span boundary.
"""

from dataclasses import dataclass

import regex

from stancelab.constants import LY_NOUN_HEADS, OBJECT_ADVERBS, OBJECT_FOLLOWERS, PRONOUN_SLOTS
from stancelab.schema import resolve_entity

_GRAPHEME = regex.compile(r"\X")
_WORD_CHAR = regex.compile(r"[\p{L}\p{M}\p{N}_]")
_LATIN_WORD_CHAR = regex.compile(r"[\p{Latin}\p{N}_]")
_LATIN_LETTER = regex.compile(r"\p{Latin}")

ALIAS = "alias"


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    matched_alias: str
    entity_id: str
    kind: str  # alias | pronoun_subject | pronoun_object | pronoun_possessive

    @property
    def is_alias(self) -> bool:
        return self.kind == ALIAS


def graphemes(text):
    """Split text into extended grapheme clusters."""
    return _GRAPHEME.findall(text)


def is_latin(grapheme):
    return bool(_LATIN_LETTER.match(grapheme))


def _is_word(grapheme):
    return bool(_WORD_CHAR.match(grapheme))


def _is_latin_word(grapheme):
    return bool(_LATIN_WORD_CHAR.match(grapheme))


def _alias_boundaries_ok(g, start, end, alias_g):
    # Latin aliases must not start or end inside a Latin word ("Pita" in "Pitak").
    if is_latin(alias_g[0]) and start > 0 and _is_latin_word(g[start - 1]):
        return False
    if is_latin(alias_g[-1]) and end < len(g) and _is_latin_word(g[end]):
        return False
    return True


def _word_runs(g):
    start = None
    for i, grapheme in enumerate(g):
        if _is_word(grapheme):
            if start is None:
                start = i
        elif start is not None:
            yield start, i
            start = None
    if start is not None:
        yield start, len(g)


def _next_word(g, pos):
    i = pos
    while i < len(g) and g[i].isspace():
        i += 1
    if i >= len(g) or not _is_word(g[i]):
        return None
    j = i
    while j < len(g) and _is_word(g[j]):
        j += 1
    return "".join(g[i:j])


def _pronoun_forms(entry):
    forms = {}
    for slot in PRONOUN_SLOTS:
        forms.setdefault(entry.pronouns[slot].casefold(), []).append(slot)
    return forms


def _starts_noun_phrase(word):
    """Whether a word after a shared possessive/object form can head what it owns."""
    if word is None:
        return False
    word = word.casefold()
    if word in OBJECT_FOLLOWERS or word in OBJECT_ADVERBS:
        return False
    # -ly adverbs ("completely", "publicly") follow objects
    return not (word.endswith("ly") and word not in LY_NOUN_HEADS)


def _pick_slot(slots, g, end):
    """
    Resolve a pronoun form shared by several slots (English "her").

    A shared possessive is kept only when the next word can open a noun
    phrase; otherwise the first remaining slot in subject/object order wins.
    """
    if len(slots) == 1:
        return slots[0]
    if "possessive" in slots:
        if _starts_noun_phrase(_next_word(g, end)):
            return "possessive"
        slots = [s for s in slots if s != "possessive"]
    return slots[0]


def _select_non_overlapping(candidates):
    # Leftmost first; at equal start the longest wins, aliases before pronouns.
    ordered = sorted(candidates, key=lambda c: (c.start, -(c.end - c.start), not c.is_alias))
    chosen = []
    last_end = 0
    for span in ordered:
        if span.start >= last_end:
            chosen.append(span)
            last_end = span.end
    return chosen


def find_entity_spans(text, lexicon, target, include_pronouns=True):
    """
    Locate every mention of `target` in `text`.

    Aliases are matched as exact grapheme substrings; pronouns from the
    target's pronoun map are matched case-insensitively as whole words and
    attributed to the target.

    Args:
        text (str): NFC text.
        lexicon (sequence of EntityEntry): Entity lexicon.
        target (str): entity_id whose mentions are wanted.
        include_pronouns (bool): Also return pronoun spans.

    Returns:
        list of EntitySpan: Non-overlapping, sorted by start.
    """
    entry = resolve_entity(lexicon, target)
    g = graphemes(text)
    candidates = []

    for alias in entry.aliases:
        alias_g = graphemes(alias)
        width = len(alias_g)
        for i in range(len(g) - width + 1):
            if g[i:i + width] == alias_g and _alias_boundaries_ok(g, i, i + width, alias_g):
                candidates.append(EntitySpan(i, i + width, alias, entry.entity_id, ALIAS))

    if include_pronouns:
        forms = _pronoun_forms(entry)
        for start, end in _word_runs(g):
            word = "".join(g[start:end])
            slots = forms.get(word.casefold())
            if slots:
                slot = _pick_slot(slots, g, end)
                candidates.append(EntitySpan(start, end, word, entry.entity_id, f"pronoun_{slot}"))

    return _select_non_overlapping(candidates)


def mentions_target(text, lexicon, target):
    """True when at least one alias of target appears in text."""
    return any(span.is_alias for span in find_entity_spans(text, lexicon, target, include_pronouns=False))
