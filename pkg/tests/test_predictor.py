import random
import threading
import time

import pytest
import requests

from stancelab.errors import ConfigError, StanceParseError
from stancelab.predictor import (
    ChatBackend,
    PredictorConfig,
    ReplayBackend,
    ResponseCache,
    build_backend,
    cache_key,
    load_template,
    parse_stance_response,
    predict_batch,
    prompt_hash,
    render_prompt,
)
from stancelab.predictor.prompts import PromptTemplate
from stancelab.schema import PredictionRecord, StanceLabel


@pytest.fixture
def chat_config(tmp_path):
    return PredictorConfig(kind="chat", endpoint="http://localhost:8000/v1", model="test-model",
                           max_in_flight=4, retries=1, backoff=0.0, cache_path=str(tmp_path / "cache.jsonl"))


class KeywordBackend:
    """Answers with the gold stance hidden in the prompt after a seeded random delay."""

    is_remote = True
    name = "stub"

    def __init__(self, answers, seed=0, max_delay=0.01):
        self.answers = answers
        self.calls = 0
        self.max_delay = max_delay
        self._rng = random.Random(seed)
        self._lock = threading.Lock()

    def complete(self, prompt):
        with self._lock:
            self.calls += 1
            delay = self._rng.uniform(0, self.max_delay)
        time.sleep(delay)
        for text, answer in self.answers.items():
            if text in prompt:
                return answer
        return "I cannot say."


def _chat_response(mocker, content):
    response = mocker.Mock()
    response.json.return_value = {"choices": [{"message": {"content": content}}]}
    response.raise_for_status.return_value = None
    return response


@pytest.mark.parametrize("raw, expected", [
    ("Stance: Support", StanceLabel.SUPPORT),
    ("AGAINST.", StanceLabel.AGAINST),
    ("The tweet is neutral toward the target.", StanceLabel.NEUTRAL),
    ("จุดยืน: คัดค้าน", StanceLabel.AGAINST),
    ("Reasoning first... final answer: against, not support", StanceLabel.AGAINST),
])
def test_parse_stance_response(raw, expected):
    assert parse_stance_response(raw) is expected


@pytest.mark.parametrize("raw", ["", "I have no idea", "unsupported claim"])
def test_parse_stance_response_failure(raw):
    with pytest.raises(StanceParseError):
        parse_stance_response(raw)


def test_render_prompt(political_lexicon, example_factory):
    template = load_template("raw")
    example = example_factory("e1", "พิธา did a great job {not a slot}", "pita")
    prompt = render_prompt(template, example, political_lexicon)
    assert "พิธา did a great job {not a slot}" in prompt
    assert "toward Pita." in prompt
    assert prompt == render_prompt(template, example, political_lexicon)
    assert prompt_hash(prompt) == prompt_hash(render_prompt(template, example, political_lexicon))


@pytest.mark.parametrize("name", ["raw", "debias", "cot"])
def test_bundled_templates_have_each_slot_once(name):
    assert load_template(name).name == name


def test_template_missing_slot():
    with pytest.raises(ConfigError):
        PromptTemplate("broken", "Stance toward {target}?").check()
    with pytest.raises(ConfigError):
        load_template("sarcastic")


def test_predictor_config_validation():
    with pytest.raises(ConfigError):
        PredictorConfig(kind="chat", endpoint="http://x", model="m", temperature=0.7)
    with pytest.raises(ConfigError):
        PredictorConfig(kind="chat", endpoint="http://x")
    with pytest.raises(ConfigError):
        PredictorConfig(kind="oracle")
    assert PredictorConfig(kind="chat", endpoint="http://x", model="m").label == "chat:m"


def test_cache_key_separates_parts():
    assert cache_key("a", "bc", "d") != cache_key("ab", "c", "d")
    assert cache_key("a", "b", "prompt") == cache_key("a", "b", "prompt")


def test_cache_persists_and_reloads(tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = ResponseCache(path)
    assert cache.get_or_compute("k", lambda: "support") == ("support", False)
    assert cache.get_or_compute("k", lambda: pytest.fail("should be cached")) == ("support", True)
    assert (cache.hits, cache.misses) == (1, 1)

    reloaded = ResponseCache(path)
    assert "k" in reloaded
    assert reloaded.get("k") == "support"


def test_damaged_cache_warns(tmp_path):
    path = tmp_path / "cache.jsonl"
    path.write_text('{"key": "k", "raw_response": "support", "timestamp": "t"}\n{oops\n', encoding="utf-8")
    with pytest.warns(UserWarning):
        cache = ResponseCache(path)
    assert len(cache) == 1


def test_predict_batch_empty(chat_config, political_lexicon):
    backend = KeywordBackend({})
    assert predict_batch(backend, [], load_template("raw"), chat_config, political_lexicon) == []


def test_predict_batch_keeps_input_order(chat_config, tiny_corpus):
    answers = {ex.text: ex.stance.value for ex in tiny_corpus}
    backend = KeywordBackend(answers)
    records = predict_batch(backend, list(tiny_corpus), load_template("raw"), chat_config,
                            tiny_corpus.lexicon, cache=ResponseCache(), progress=False)
    assert [r.example_id for r in records] == tiny_corpus.ids
    assert [r.argmax for r in records] == [ex.stance for ex in tiny_corpus]
    assert all(r.prompt_hash and r.raw_response for r in records)


@pytest.mark.parametrize("seed", range(5))
def test_predict_batch_order_survives_random_delays(chat_config, bundled_corpus, seed):
    examples = list(bundled_corpus)[:60]
    backend = KeywordBackend({ex.text: ex.stance.value for ex in examples}, seed=seed, max_delay=0.02)
    records = predict_batch(backend, examples, load_template("raw"), chat_config,
                            bundled_corpus.lexicon, cache=ResponseCache(), progress=False)
    assert [r.example_id for r in records] == [ex.id for ex in examples]
    assert [r.argmax for r in records] == [ex.stance for ex in examples]


def test_warm_cache_makes_no_calls(chat_config, tiny_corpus, mocker):
    template = load_template("raw")
    backend = KeywordBackend({ex.text: ex.stance.value for ex in tiny_corpus})
    cache = ResponseCache(chat_config.cache_path)
    first = predict_batch(backend, list(tiny_corpus), template, chat_config, tiny_corpus.lexicon,
                          cache=cache, progress=False)
    assert backend.calls == len(tiny_corpus)

    spy = mocker.spy(backend, "complete")
    second = predict_batch(backend, list(tiny_corpus), template, chat_config, tiny_corpus.lexicon,
                           cache=ResponseCache(chat_config.cache_path), progress=False)
    assert spy.call_count == 0
    assert second == first


def test_identical_prompts_share_a_call(chat_config, political_lexicon, example_factory):
    examples = [example_factory(f"d{i}", "Pita did a great job.") for i in range(6)]
    backend = KeywordBackend({"great job": "support"})
    records = predict_batch(backend, examples, load_template("raw"), chat_config, political_lexicon,
                            cache=ResponseCache(), progress=False)
    assert backend.calls == 1
    assert all(r.argmax is StanceLabel.SUPPORT for r in records)


def test_unparseable_and_transport_failures(chat_config, political_lexicon, example_factory, mocker):
    mocker.patch("stancelab.predictor.batch.time.sleep")
    examples = [example_factory("ok", "Pita did a great job."),
                example_factory("mute", "Pita said nothing."),
                example_factory("down", "Pita went offline.")]

    class FlakyBackend(KeywordBackend):
        def complete(self, prompt):
            if "offline" in prompt:
                raise requests.ConnectionError("connection refused")
            return super().complete(prompt)

    backend = FlakyBackend({"great job": "Support"})
    ok, mute, down = predict_batch(backend, examples, load_template("raw"), chat_config, political_lexicon,
                                   cache=ResponseCache(), progress=False)
    assert ok.ok and ok.argmax is StanceLabel.SUPPORT
    assert not mute.ok and mute.raw_response == "I cannot say." and mute.error.startswith("parse")
    assert not down.ok and down.error.startswith("transport")


def test_retries_then_succeeds(chat_config, political_lexicon, example_factory, mocker):
    sleep = mocker.patch("stancelab.predictor.batch.time.sleep")
    backend = mocker.Mock(is_remote=True)
    backend.name = "flaky"
    backend.complete.side_effect = [requests.Timeout("slow"), "against"]
    (record,) = predict_batch(backend, [example_factory("r1", "Pita did a great job.")], load_template("raw"),
                              chat_config, political_lexicon, cache=ResponseCache(), progress=False)
    assert record.argmax is StanceLabel.AGAINST
    assert backend.complete.call_count == 2
    sleep.assert_called_once_with(0.0)


def test_chat_backend_posts_deterministic_request(chat_config, mocker, monkeypatch):
    monkeypatch.setenv(chat_config.api_key_env, "secret")
    session = mocker.Mock()
    session.post.return_value = _chat_response(mocker, "Stance: neutral")
    backend = ChatBackend(chat_config, session=session)
    assert backend.complete("hello") == "Stance: neutral"

    url = session.post.call_args.args[0]
    kwargs = session.post.call_args.kwargs
    assert url == "http://localhost:8000/v1/chat/completions"
    assert kwargs["json"]["temperature"] == 0.0
    assert kwargs["json"]["messages"] == [{"role": "user", "content": "hello"}]
    assert kwargs["headers"]["Authorization"] == "Bearer secret"


def test_chat_backend_malformed_body(chat_config, mocker):
    session = mocker.Mock()
    response = mocker.Mock()
    response.json.return_value = {"error": "overloaded"}
    session.post.return_value = response
    with pytest.raises(ValueError):
        ChatBackend(chat_config, session=session).complete("hello")


def test_chat_pipeline_warm_cache_skips_network(chat_config, tiny_corpus, mocker):
    mocker.patch("requests.Session.post", return_value=_chat_response(mocker, "neutral"))
    backend = build_backend(chat_config)
    template = load_template("raw")
    predict_batch(backend, list(tiny_corpus), template, chat_config, tiny_corpus.lexicon, progress=False)
    assert requests.Session.post.call_count == len(tiny_corpus)

    requests.Session.post.reset_mock()
    records = predict_batch(build_backend(chat_config), list(tiny_corpus), template, chat_config,
                            tiny_corpus.lexicon, progress=False)
    assert requests.Session.post.call_count == 0
    assert all(r.argmax is StanceLabel.NEUTRAL for r in records)


def test_replay_backend_equals_gold(tiny_corpus):
    gold = [PredictionRecord.one_hot(ex.id, ex.stance, "replay") for ex in tiny_corpus]
    backend = ReplayBackend(gold[:-1])
    records = predict_batch(backend, list(tiny_corpus), load_template("raw"),
                            PredictorConfig(kind="replay"), tiny_corpus.lexicon)
    assert records[:-1] == gold[:-1]
    assert not records[-1].ok


def test_build_backend_requires_inputs():
    with pytest.raises(ConfigError):
        build_backend(PredictorConfig(kind="replay"))
    with pytest.raises(ConfigError):
        build_backend(PredictorConfig(kind="simulator"))
