import json
import unicodedata

import pytest

from stancelab.errors import CorpusParseError, ValidationError
from stancelab.io import (
    load_annotations,
    load_corpus,
    load_lexicon,
    load_predictions,
    save_corpus,
    save_predictions,
    validate_example,
)
from stancelab.schema import PredictionRecord, Provenance, StanceLabel


@pytest.fixture
def lexicon_file(tmp_path, political_lexicon):
    path = tmp_path / "lexicon.json"
    path.write_text(json.dumps([e.to_record() for e in political_lexicon], ensure_ascii=False), encoding="utf-8")
    return path


def _write_lines(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
    return path


def _record(**overrides):
    record = {"id": "t1", "text": "Pita did a great job.", "target_id": "pita",
              "stance": "support", "sentiment": "positive"}
    record.update(overrides)
    return record


def test_bundled_corpus_has_90_items_per_target(bundled_corpus):
    assert len(bundled_corpus) == 270
    assert bundled_corpus.entity_ids == ["anan", "busaba", "chatchai"]
    for entity_id in bundled_corpus.entity_ids:
        assert sum(ex.target_id == entity_id for ex in bundled_corpus) == 90


def test_empty_corpus_file(tmp_path, lexicon_file):
    corpus_path = tmp_path / "empty.jsonl"
    corpus_path.write_text("", encoding="utf-8")
    corpus = load_corpus(corpus_path, lexicon_file)
    assert len(corpus) == 0
    assert len(corpus.lexicon) == 3


def test_malformed_line_reports_line_number(tmp_path, lexicon_file):
    corpus_path = tmp_path / "bad.jsonl"
    corpus_path.write_text(json.dumps(_record()) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(CorpusParseError) as excinfo:
        load_corpus(corpus_path, lexicon_file)
    assert excinfo.value.line_number == 2


def test_validate_example_pass_through(political_lexicon):
    example = validate_example(_record(), political_lexicon)
    assert example.target_id == "pita"
    assert example.stance is StanceLabel.SUPPORT
    assert example.provenance is Provenance.ORIGINAL
    assert example.stance_verified


def test_validate_example_reports_every_bad_field(political_lexicon):
    with pytest.raises(ValidationError) as excinfo:
        validate_example(_record(target_id="prayut", stance="pro", text="   "), political_lexicon)
    assert excinfo.value.example_id == "t1"
    assert set(excinfo.value.fields) == {"text", "target_id", "stance"}


def test_counterfactual_needs_source(political_lexicon):
    with pytest.raises(ValidationError) as excinfo:
        validate_example(_record(provenance="counterfactual"), political_lexicon)
    assert excinfo.value.fields == ["source_id"]


def test_text_is_nfc_normalized(political_lexicon):
    decomposed = unicodedata.normalize("NFD", "Café owners love Pita.")
    example = validate_example(_record(text=decomposed), political_lexicon)
    assert example.text == unicodedata.normalize("NFC", decomposed)


def test_duplicate_ids_rejected(tmp_path, lexicon_file):
    corpus_path = _write_lines(tmp_path / "dup.jsonl", [_record(), _record()])
    with pytest.raises(ValidationError, match="more than once"):
        load_corpus(corpus_path, lexicon_file)


def test_lexicon_requires_canonical_alias(tmp_path):
    path = tmp_path / "lexicon.json"
    path.write_text(json.dumps([{
        "entity_id": "pita", "canonical": "Pita", "aliases": ["พิธา"],
        "pronouns": {"subject": "he", "object": "him", "possessive": "his"},
    }]), encoding="utf-8")
    with pytest.raises(ValidationError) as excinfo:
        load_lexicon(path)
    assert excinfo.value.fields == ["aliases"]


def test_corpus_save_and_reload(tmp_path, bundled_corpus, bundled_paths):
    path = save_corpus(bundled_corpus, tmp_path / "copy.jsonl")
    reloaded = load_corpus(path, bundled_paths["lexicon"])
    assert reloaded.examples == bundled_corpus.examples


def test_load_annotations_checks_annotator_count(tmp_path):
    path = _write_lines(tmp_path / "ann.jsonl", [
        {"item_id": "a", "labels": ["support", "support", "against"]},
        {"item_id": "b", "labels": ["against", "against"]},
    ])
    with pytest.raises(ValidationError) as excinfo:
        load_annotations(path)
    assert excinfo.value.example_id == "b"


def test_prediction_file_forms(tmp_path):
    path = _write_lines(tmp_path / "preds.jsonl", [
        {"example_id": "a", "label": "against"},
        {"example_id": "b", "distribution": [0.2, 0.2, 0.6]},
        {"example_id": "c", "status": "failed", "error": "timeout"},
    ])
    a, b, c = load_predictions(path)
    assert a.argmax is StanceLabel.AGAINST and a.distribution == (0.0, 1.0, 0.0)
    assert b.argmax is StanceLabel.NEUTRAL
    assert not c.ok and c.error == "timeout"
    assert a.backend == "replay"


def test_prediction_file_bad_label(tmp_path):
    path = _write_lines(tmp_path / "preds.jsonl", [{"example_id": "a", "label": "maybe"}])
    with pytest.raises(CorpusParseError) as excinfo:
        load_predictions(path)
    assert excinfo.value.line_number == 1


def test_saved_predictions_replay(tmp_path):
    records = [
        PredictionRecord.one_hot("a", StanceLabel.SUPPORT, "sim"),
        PredictionRecord.failed("b", "sim", "parse: no keyword"),
    ]
    reloaded = load_predictions(save_predictions(records, tmp_path / "p.jsonl"))
    assert reloaded == records
