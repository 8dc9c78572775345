# constants.py

from stancelab.schema import SentimentLabel, StanceLabel

# Fixed label order; also the tie-break order everywhere (support < against < neutral).
STANCE_ORDER = (StanceLabel.SUPPORT, StanceLabel.AGAINST, StanceLabel.NEUTRAL)
SENTIMENT_ORDER = (SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL)
K = len(STANCE_ORDER)

SENTIMENT_TO_STANCE = {
    SentimentLabel.POSITIVE: StanceLabel.SUPPORT,
    SentimentLabel.NEGATIVE: StanceLabel.AGAINST,
    SentimentLabel.NEUTRAL: StanceLabel.NEUTRAL,
}

# Only these pairs count as sentiment-aligned for Bias-SSC.
ALIGNED_PAIRS = {
    (SentimentLabel.POSITIVE, StanceLabel.SUPPORT),
    (SentimentLabel.NEGATIVE, StanceLabel.AGAINST),
}

STANCE_KEYWORDS = {
    "support": StanceLabel.SUPPORT,
    "against": StanceLabel.AGAINST,
    "neutral": StanceLabel.NEUTRAL,
    "สนับสนุน": StanceLabel.SUPPORT,
    "คัดค้าน": StanceLabel.AGAINST,
    "เป็นกลาง": StanceLabel.NEUTRAL,
}

PRONOUN_SLOTS = ("subject", "object", "possessive")

# Words after a shared object/possessive form (English "her") that mark it as an object.
OBJECT_FOLLOWERS = frozenset({
    "a", "an", "the", "and", "or", "but", "nor", "so", "yet", "to", "in", "on", "at",
    "for", "with", "as", "from", "by", "of", "about", "again", "now", "today",
    "too", "more", "less", "because", "if", "when", "while", "up", "down", "out",
    "back", "this", "that", "these", "those", "is", "was", "will", "would", "than",
    "then", "here", "there", "anymore", "either", "enough", "instead", "once",
})

# Adverbs and time words that also leave a shared form in object position.
OBJECT_ADVERBS = frozenset({
    "yesterday", "tomorrow", "tonight", "already", "anyway", "still", "ever", "never",
    "always", "soon", "later", "not", "alone", "twice", "almost", "just", "even",
})

# Words ending in "-ly" that can open a noun phrase ("her family", "her early years").
LY_NOUN_HEADS = frozenset({
    "ally", "anomaly", "assembly", "belly", "bully", "costly", "daily", "deadly", "early",
    "elderly", "family", "folly", "friendly", "holy", "italy", "july", "likely", "lively",
    "lonely", "lovely", "monopoly", "monthly", "only", "orderly", "rally", "reply", "silly",
    "supply", "tally", "timely", "ugly", "weekly", "yearly",
})

FEATURE_NAMES = (
    "base_support", "base_against", "base_neutral",
    "sentiment_positive", "sentiment_negative", "sentiment_neutral",
    "sentiment_alignment",
    "cf_flip_rate",
    "cf_hist_support", "cf_hist_against", "cf_hist_neutral",
    "rationale_mentions_target",
    "rationale_polarity",
    "bias_constant",
)

PROMPT_TEMPLATE_NAMES = ("raw", "debias", "cot")

CALIBRATED_BACKEND = "thaifactual"
CONSENSUS_BACKEND = "consensus"
SIMULATOR_BACKEND = "simulator"
REPLAY_BACKEND = "replay"

DEFAULT_TAU = 0.75
DEFAULT_RETRIES = 2
DEFAULT_MAX_IN_FLIGHT = 4
DEFAULT_API_KEY_ENV = "STANCELAB_API_KEY"

DISTRIBUTION_TOLERANCE = 1e-9
