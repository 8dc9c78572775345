"""
Stance predictor backends.

Remote backends expose `complete(prompt) -> str` and are driven concurrently
by predict_batch. Pure backends (replay, simulator) expose
`predict_examples(examples) -> list of PredictionRecord` and run sequentially.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

import requests

from stancelab.constants import DEFAULT_API_KEY_ENV, DEFAULT_MAX_IN_FLIGHT, DEFAULT_RETRIES, REPLAY_BACKEND
from stancelab.errors import ConfigError
from stancelab.io.predictions import load_predictions
from stancelab.schema import PredictionRecord, index_predictions

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("chat", "replay", "simulator")


@dataclass(frozen=True)
class PredictorConfig:
    kind: str
    name: Optional[str] = None
    endpoint: Optional[str] = None
    model: Optional[str] = None
    temperature: float = 0.0
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    retries: int = DEFAULT_RETRIES
    backoff: float = 0.5
    timeout: float = 60.0
    cache_path: Optional[str] = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    trace: bool = False

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"I don't know the backend kind '{self.kind}'. Use one of {list(BACKEND_KINDS)}.")
        if self.temperature != 0.0:
            raise ConfigError(f"Decoding must be deterministic: temperature has to be 0.0, got {self.temperature}.")
        if self.max_in_flight < 1:
            raise ConfigError(f"max_in_flight must be at least 1, got {self.max_in_flight}.")
        if self.retries < 0:
            raise ConfigError(f"retries can't be negative, got {self.retries}.")
        if self.kind == "chat" and not (self.endpoint and self.model):
            raise ConfigError("A chat backend needs both an endpoint and a model.")

    @property
    def label(self):
        """Name reported on prediction records and leaderboard rows."""
        if self.name:
            return self.name
        if self.kind == "chat":
            return f"chat:{self.model}"
        return self.kind


def _redact(headers):
    return {k: ("***" if k.lower() == "authorization" else v) for k, v in headers.items()}


class ChatBackend:
    """
    Chat-completion HTTP backend (OpenAI-compatible `/chat/completions`).

    The API key is read from the environment variable named in the config;
    it is optional so local endpoints without auth keep working.
    """

    is_remote = True

    def __init__(self, config, session=None):
        self.config = config
        self.name = config.label
        self.session = session or requests.Session()
        self._api_key = os.environ.get(config.api_key_env)
        if self._api_key is None:
            logger.warning("%s is not set; calling %s without an API key", config.api_key_env, config.endpoint)

    @property
    def url(self):
        return self.config.endpoint.rstrip("/") + "/chat/completions"

    def complete(self, prompt):
        """
        Send one prompt and return the assistant message text.

        Raises:
            requests.RequestException: On transport or HTTP errors.
            ValueError: If the response body has no message content.
        """
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        if self.config.trace:
            logger.debug("POST %s headers=%s body=%s", self.url, _redact(headers), body)

        response = self.session.post(self.url, json=body, headers=headers, timeout=self.config.timeout)
        response.raise_for_status()
        payload = response.json()
        if self.config.trace:
            logger.debug("Response from %s: %s", self.url, payload)
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ValueError(f"Malformed chat-completion response: {payload!r}") from e
        if not isinstance(content, str):
            raise ValueError(f"Chat-completion content is not text: {content!r}")
        return content


class ReplayBackend:
    """Replays predictions recorded in a file (or given directly)."""

    is_remote = False

    def __init__(self, records, name=REPLAY_BACKEND):
        self.name = name
        self._by_id = index_predictions(records)

    @classmethod
    def from_file(cls, predictions_path, name=REPLAY_BACKEND):
        return cls(load_predictions(predictions_path, default_backend=name), name=name)

    def predict_examples(self, examples):
        records = []
        missing = 0
        for ex in examples:
            record = self._by_id.get(ex.id)
            if record is None:
                missing += 1
                records.append(PredictionRecord.failed(ex.id, self.name, "no replayed prediction for this example"))
            else:
                records.append(record)
        if missing:
            logger.warning("Replay backend '%s' has no prediction for %d of %d examples", self.name, missing, len(records))
        return records


def build_backend(config, predictions_path=None, simulator_config=None, session=None):
    """
    Instantiate the backend described by a PredictorConfig.

    Args:
        config (PredictorConfig): Backend settings.
        predictions_path (str or Path, optional): Replay file, required for kind 'replay'.
        simulator_config (SimulatorConfig, optional): Required for kind 'simulator'.
        session (requests.Session, optional): Injected HTTP session for chat backends.

    Raises:
        ConfigError: If the kind-specific input is missing.
    """
    if config.kind == "chat":
        return ChatBackend(config, session=session)
    if config.kind == "replay":
        if predictions_path is None:
            raise ConfigError(f"Replay backend '{config.label}' needs a predictions file.")
        return ReplayBackend.from_file(predictions_path, name=config.label)
    from stancelab.simulator import SimulatorBackend

    if simulator_config is None:
        raise ConfigError(f"Simulator backend '{config.label}' needs simulator settings.")
    return SimulatorBackend(simulator_config, name=config.label)
