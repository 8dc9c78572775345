import logging
import time
from concurrent.futures import ThreadPoolExecutor

import requests
from tqdm.auto import tqdm

from stancelab.errors import StanceParseError
from stancelab.predictor.cache import ResponseCache, cache_key
from stancelab.predictor.parsing import parse_stance_response
from stancelab.predictor.prompts import prompt_hash, render_prompt
from stancelab.schema import PredictionRecord

logger = logging.getLogger(__name__)


def _call_with_retries(backend, prompt, retries, backoff):
    """Call backend.complete, retrying transport errors with exponential backoff."""
    attempt = 0
    while True:
        try:
            return backend.complete(prompt)
        except (requests.RequestException, ValueError) as e:
            if attempt >= retries:
                raise
            delay = backoff * (2 ** attempt)
            logger.warning("Request failed (%s); retry %d/%d in %.2fs", e, attempt + 1, retries, delay)
            time.sleep(delay)
            attempt += 1


def _predict_one(backend, example, prompt, config, cache):
    digest = prompt_hash(prompt)
    key = cache_key(backend.name, config.model, prompt)
    try:
        raw, _ = cache.get_or_compute(
            key, lambda: _call_with_retries(backend, prompt, config.retries, config.backoff)
        )
    except (requests.RequestException, ValueError) as e:
        logger.error("Giving up on '%s' after %d retries: %s", example.id, config.retries, e)
        return PredictionRecord.failed(example.id, backend.name, f"transport: {e}", prompt_hash=digest)
    try:
        label = parse_stance_response(raw)
    except StanceParseError as e:
        logger.warning("Unparseable response for '%s': %s", example.id, e)
        return PredictionRecord.failed(example.id, backend.name, f"parse: {e}", prompt_hash=digest, raw_response=raw)
    return PredictionRecord.one_hot(example.id, label, backend.name, prompt_hash=digest, raw_response=raw)


def predict_batch(backend, examples, template, config, lexicon, cache=None, progress=True):
    """
    Run a predictor over examples and return one record per example, in input order.

    Remote backends render the prompt, consult the cache, and only call the
    endpoint on a miss, with at most `config.max_in_flight` requests at once.
    Transport failures (after retries) and unparseable responses become
    failed records; the batch always completes. Pure backends are run
    sequentially and ignore the template.

    Args:
        backend: A ChatBackend, ReplayBackend or SimulatorBackend.
        examples (list of Example): Items to predict.
        template (PromptTemplate): Prompt template for remote backends.
        config (PredictorConfig): Backend settings.
        lexicon (sequence of EntityEntry): Used to render the target name.
        cache (ResponseCache, optional): Defaults to one at config.cache_path.
        progress (bool): Show a tqdm progress bar.

    Returns:
        list of PredictionRecord
    """
    examples = list(examples)
    if not examples:
        return []
    if not getattr(backend, "is_remote", False):
        return backend.predict_examples(examples)

    if cache is None:
        cache = ResponseCache(config.cache_path)
    prompts = [render_prompt(template, ex, lexicon) for ex in examples]

    records = [None] * len(examples)
    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        futures = {
            pool.submit(_predict_one, backend, ex, prompt, config, cache): i
            for i, (ex, prompt) in enumerate(zip(examples, prompts))
        }
        with tqdm(total=len(futures), desc=f"Predicting ({backend.name}/{template.name})", disable=not progress) as pbar:
            for future, i in futures.items():
                records[i] = future.result()
                pbar.update(1)

    failed = sum(1 for r in records if not r.ok)
    logger.info(
        "%s: %d predictions, %d failed, cache hits=%d misses=%d",
        backend.name, len(records), failed, cache.hits, cache.misses,
    )
    return records
