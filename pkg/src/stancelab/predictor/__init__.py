from .backends import BACKEND_KINDS, ChatBackend, PredictorConfig, ReplayBackend, build_backend
from .batch import predict_batch
from .cache import ResponseCache, cache_key
from .parsing import parse_stance_response
from .prompts import PromptTemplate, load_template, prompt_hash, render_prompt
