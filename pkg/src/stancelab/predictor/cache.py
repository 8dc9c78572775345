"""
Persistent response cache for remote predictors.

The cache file is append-only JSONL ({key, raw_response, timestamp}); the
latest line for a key wins on load. All writes go through one lock, and
concurrent misses on the same key share a single computation.
"""

import hashlib
import logging
import threading
import warnings
from concurrent.futures import Future
from datetime import datetime, timezone
from pathlib import Path

from stancelab.errors import CorpusParseError
from stancelab.io.jsonl import dumps_record, read_jsonl

logger = logging.getLogger(__name__)


def cache_key(backend, model, prompt):
    """Digest of (backend, model, prompt bytes)."""
    digest = hashlib.sha256()
    for part in (backend, model or "", prompt):
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


class ResponseCache:
    """
    Response cache keyed by cache_key(). With path=None it lives in memory only.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._entries = {}
        self._inflight = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.load()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def load(self):
        """Read the cache file if it exists; a corrupt tail is skipped with a warning."""
        if self.path is None or not self.path.exists():
            return
        try:
            for _, row in read_jsonl(self.path):
                if "key" in row and "raw_response" in row:
                    self._entries[row["key"]] = row["raw_response"]
        except CorpusParseError as e:
            warnings.warn(f"Cache file {self.path} is damaged ({e}); keeping the {len(self._entries)} entries read so far.")
        logger.debug("Loaded %d cached responses from %s", len(self._entries), self.path)

    def get(self, key):
        with self._lock:
            return self._entries.get(key)

    def _append(self, key, raw_response):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        row = {
            "key": key,
            "raw_response": raw_response,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        with self.path.open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps_record(row) + "\n")

    def get_or_compute(self, key, compute):
        """
        Return (raw_response, was_cached). `compute` runs at most once per key,
        even when several threads miss on the same key at the same time.
        """
        with self._lock:
            if key in self._entries:
                self.hits += 1
                return self._entries[key], True
            pending = self._inflight.get(key)
            if pending is None:
                pending = Future()
                self._inflight[key] = pending
                owner = True
            else:
                owner = False

        if not owner:
            return pending.result(), True

        try:
            value = compute()
        except BaseException as e:
            with self._lock:
                self._inflight.pop(key, None)
            pending.set_exception(e)
            raise

        with self._lock:
            self._entries[key] = value
            self._append(key, value)
            self._inflight.pop(key, None)
            self.misses += 1
        pending.set_result(value)
        return value, False
