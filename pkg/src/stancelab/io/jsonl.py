"""
Line-delimited JSON helpers shared by the corpus, annotation, prediction and cache files.
"""

import json
from pathlib import Path

from stancelab.errors import CorpusParseError


def read_jsonl(path):
    """
    Yield (line_number, record) for every non-blank line of a UTF-8 JSONL file.

    Raises:
        CorpusParseError: If a line is not a JSON object.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusParseError(path, line_number, e.msg) from e
            if not isinstance(record, dict):
                raise CorpusParseError(path, line_number, "expected one JSON object per line")
            yield line_number, record


def dumps_record(record):
    """Deterministic one-line encoding (sorted keys, raw UTF-8)."""
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(dumps_record(record) + "\n")
    return path


def write_json(path, document):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
