from .corpus import load_corpus, load_lexicon, save_corpus, validate_example
from .annotations import load_annotations
from .predictions import load_predictions, save_predictions
