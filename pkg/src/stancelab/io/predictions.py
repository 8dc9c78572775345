"""
Replay-compatible prediction files: one {example_id, label} or
{example_id, distribution[3]} object per line.
"""

from stancelab.constants import REPLAY_BACKEND
from stancelab.errors import CorpusParseError
from stancelab.io.jsonl import read_jsonl, write_jsonl
from stancelab.schema import PredictionRecord, StanceLabel


def record_from_row(row, default_backend=REPLAY_BACKEND):
    """Rebuild a PredictionRecord from one parsed prediction line."""
    example_id = row["example_id"]
    backend = row.get("backend", default_backend)
    extra = {"prompt_hash": row.get("prompt_hash", ""), "raw_response": row.get("raw_response")}
    if row.get("status") == "failed":
        return PredictionRecord.failed(example_id, backend, row.get("error", "failed"), **extra)
    if "distribution" in row:
        return PredictionRecord.from_distribution(example_id, row["distribution"], backend, **extra)
    return PredictionRecord.one_hot(example_id, StanceLabel(row["label"]), backend, **extra)


def load_predictions(predictions_path, default_backend=REPLAY_BACKEND):
    """
    Load a predictions file into PredictionRecords (file order).

    Raises:
        CorpusParseError: If a line lacks an example id or carries an invalid label/distribution.
    """
    records = []
    for line_number, row in read_jsonl(predictions_path):
        try:
            records.append(record_from_row(row, default_backend))
        except (KeyError, ValueError, TypeError) as e:
            raise CorpusParseError(predictions_path, line_number, f"bad prediction record: {e}") from e
    return records


def save_predictions(records, predictions_path):
    return write_jsonl(predictions_path, (r.to_record() for r in records))
