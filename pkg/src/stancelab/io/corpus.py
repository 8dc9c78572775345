import json
import logging
import unicodedata
from pathlib import Path

from stancelab.constants import PRONOUN_SLOTS
from stancelab.errors import CorpusParseError, FieldError, ValidationError
from stancelab.io.jsonl import read_jsonl, write_jsonl
from stancelab.schema import (
    BiasMarkers,
    Corpus,
    EntityEntry,
    Example,
    Provenance,
    SentimentLabel,
    StanceLabel,
)

logger = logging.getLogger(__name__)


def _nfc(value):
    return unicodedata.normalize("NFC", value) if isinstance(value, str) else value


def _alias_key(alias):
    return unicodedata.normalize("NFC", alias).casefold().strip()


def validate_entry(raw):
    """
    Build an EntityEntry from a parsed lexicon record.

    Raises:
        ValidationError: One field error per violated lexicon invariant.
    """
    entity_id = raw.get("entity_id") if isinstance(raw, dict) else None
    errors = []
    if not isinstance(entity_id, str) or not entity_id.strip():
        errors.append(FieldError("entity_id", "must be a nonempty string"))

    canonical = _nfc(raw.get("canonical"))
    if not isinstance(canonical, str) or not canonical.strip():
        errors.append(FieldError("canonical", "must be a nonempty string"))

    aliases = raw.get("aliases")
    if not isinstance(aliases, list) or not all(isinstance(a, str) and a.strip() for a in aliases):
        errors.append(FieldError("aliases", "must be a list of nonempty strings"))
        aliases = []
    aliases = [_nfc(a) for a in aliases]
    if isinstance(canonical, str) and canonical not in aliases:
        errors.append(FieldError("aliases", f"must include the canonical name '{canonical}'"))
    keys = [_alias_key(a) for a in aliases]
    if len(set(keys)) != len(keys):
        errors.append(FieldError("aliases", "contains duplicates after normalization"))

    pronouns = raw.get("pronouns")
    if not isinstance(pronouns, dict) or set(pronouns) != set(PRONOUN_SLOTS):
        errors.append(FieldError("pronouns", f"keys must be exactly {list(PRONOUN_SLOTS)}"))
        pronouns = {}
    elif not all(isinstance(v, str) and v.strip() for v in pronouns.values()):
        errors.append(FieldError("pronouns", "values must be nonempty strings"))

    party = raw.get("party")
    if party is not None and not isinstance(party, str):
        errors.append(FieldError("party", "must be a string when present"))

    if errors:
        raise ValidationError(entity_id or "<lexicon entry>", errors)
    return EntityEntry(
        entity_id=entity_id,
        canonical=canonical,
        aliases=tuple(aliases),
        pronouns={slot: _nfc(pronouns[slot]) for slot in PRONOUN_SLOTS},
        party=party,
    )


def load_lexicon(lexicon_path):
    """
    Load the entity lexicon (a JSON list of entries, or {"entities": [...]}).

    Returns:
        tuple of EntityEntry, in file order.
    """
    path = Path(lexicon_path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusParseError(path, e.lineno, e.msg) from e
    if isinstance(document, dict):
        document = document.get("entities")
    if not isinstance(document, list):
        raise CorpusParseError(path, 1, "expected a list of entity entries")

    entries = tuple(validate_entry(raw) for raw in document)
    seen = set()
    for entry in entries:
        if entry.entity_id in seen:
            raise ValidationError(entry.entity_id, [FieldError("entity_id", "duplicated in lexicon")])
        seen.add(entry.entity_id)
    return entries


def _parse_enum(enum_cls, value, field, errors):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = [m.value for m in enum_cls]
        errors.append(FieldError(field, f"'{value}' is not one of {allowed}"))
        return None


def validate_example(raw, lexicon):
    """
    Turn a parsed corpus record into an Example.

    Text and rationale are NFC-normalized. Every violated invariant is
    reported, not just the first one.

    Args:
        raw (dict): One parsed corpus line.
        lexicon (sequence of EntityEntry): Entities the target must resolve in.

    Returns:
        Example

    Raises:
        ValidationError: Carrying one FieldError per failing field.
    """
    errors = []
    example_id = raw.get("id")
    if not isinstance(example_id, str) or not example_id.strip():
        errors.append(FieldError("id", "must be a nonempty string"))
        example_id = None

    text = _nfc(raw.get("text"))
    if not isinstance(text, str) or not text.strip():
        errors.append(FieldError("text", "must be nonempty after trimming whitespace"))

    target_id = raw.get("target_id")
    if not isinstance(target_id, str) or target_id not in {entry.entity_id for entry in lexicon}:
        errors.append(FieldError("target_id", f"'{target_id}' does not resolve in the lexicon"))

    stance = _parse_enum(StanceLabel, raw.get("stance"), "stance", errors)
    sentiment = _parse_enum(SentimentLabel, raw.get("sentiment"), "sentiment", errors)
    provenance = _parse_enum(Provenance, raw.get("provenance", "original"), "provenance", errors)

    rationale = _nfc(raw.get("rationale"))
    if rationale is not None and not isinstance(rationale, str):
        errors.append(FieldError("rationale", "must be a string when present"))

    markers = raw.get("bias_markers")
    bias_markers = None
    if markers is not None:
        if (
            isinstance(markers, dict)
            and set(markers) == {"sentiment_leakage", "entity_bias"}
            and all(isinstance(v, bool) for v in markers.values())
        ):
            bias_markers = BiasMarkers(markers["sentiment_leakage"], markers["entity_bias"])
        else:
            errors.append(FieldError("bias_markers", "must be {sentiment_leakage: bool, entity_bias: bool}"))

    source_id = raw.get("source_id")
    if provenance is Provenance.COUNTERFACTUAL and not (isinstance(source_id, str) and source_id):
        errors.append(FieldError("source_id", "counterfactual records must reference their original"))

    stance_verified = raw.get("stance_verified", provenance is not Provenance.COUNTERFACTUAL)
    if not isinstance(stance_verified, bool):
        errors.append(FieldError("stance_verified", "must be a boolean when present"))

    if errors:
        raise ValidationError(example_id or "<missing id>", errors)
    return Example(
        id=example_id,
        text=text,
        target_id=target_id,
        stance=stance,
        sentiment=sentiment,
        rationale=rationale,
        bias_markers=bias_markers,
        provenance=provenance,
        source_id=source_id,
        stance_verified=stance_verified,
    )


def build_corpus(examples, lexicon):
    """
    Check the corpus-level invariants (unique ids, resolvable counterfactual
    sources) and freeze the result.
    """
    seen = set()
    for ex in examples:
        if ex.id in seen:
            raise ValidationError(ex.id, [FieldError("id", "appears more than once in the corpus")])
        seen.add(ex.id)
    originals = {ex.id for ex in examples if ex.is_original}
    for ex in examples:
        if not ex.is_original and ex.source_id not in originals:
            raise ValidationError(ex.id, [FieldError("source_id", f"'{ex.source_id}' is not an original example")])
    return Corpus(tuple(examples), tuple(lexicon))


def load_corpus(corpus_path, lexicon_path):
    """
    Load and validate a JSONL corpus against its entity lexicon.

    Args:
        corpus_path (str or Path): UTF-8 line-delimited corpus records.
        lexicon_path (str or Path): JSON lexicon document.

    Returns:
        Corpus: Examples in load order plus the lexicon.

    Raises:
        CorpusParseError: Malformed line (with its line number).
        ValidationError: First failing record, naming its id and fields.
    """
    lexicon = load_lexicon(lexicon_path)
    examples = []
    for line_number, raw in read_jsonl(corpus_path):
        try:
            examples.append(validate_example(raw, lexicon))
        except ValidationError:
            logger.error("%s line %d failed validation", corpus_path, line_number)
            raise
    corpus = build_corpus(examples, lexicon)
    logger.info("Loaded %d examples over %d entities from %s", len(corpus), len(lexicon), corpus_path)
    return corpus


def save_corpus(corpus_or_examples, corpus_path):
    """Write examples as JSONL in their current order."""
    examples = corpus_or_examples.examples if isinstance(corpus_or_examples, Corpus) else corpus_or_examples
    return write_jsonl(corpus_path, (ex.to_record() for ex in examples))


def save_lexicon(lexicon, lexicon_path):
    path = Path(lexicon_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps([entry.to_record() for entry in lexicon], ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    return path

