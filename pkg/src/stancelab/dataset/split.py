from stancelab.errors import FieldError, ValidationError
from stancelab.schema import resolve_entity


def leave_one_entity_out_split(corpus, held_out):
    """
    Split a corpus into a fit slice (every other entity) and an eval slice
    (the held-out entity only).

    Args:
        corpus (Corpus): Validated corpus.
        held_out (str): entity_id to hold out.

    Returns:
        tuple: (fit_set, eval_set), both Corpus objects sharing the lexicon.

    Raises:
        UnknownEntityError: If held_out is not in the lexicon.
        ValidationError: If the lexicon has fewer than two entities.
    """
    resolve_entity(corpus.lexicon, held_out)
    if len(corpus.lexicon) < 2:
        raise ValidationError("<corpus>", [FieldError(
            "lexicon", f"I need at least two entities to hold one out; this corpus only has {corpus.entity_ids}."
        )])
    fit_set = corpus.subset(lambda ex: ex.target_id != held_out)
    eval_set = corpus.subset(lambda ex: ex.target_id == held_out)
    return fit_set, eval_set


def leave_one_entity_out_folds(corpus):
    """Yield (held_out, fit_set, eval_set) for every entity in lexicon order."""
    for entity_id in corpus.entity_ids:
        fit_set, eval_set = leave_one_entity_out_split(corpus, entity_id)
        yield entity_id, fit_set, eval_set
