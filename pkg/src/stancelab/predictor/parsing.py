import regex

from stancelab.constants import STANCE_KEYWORDS
from stancelab.errors import StanceParseError


def _keyword_pattern(keyword):
    # Latin keywords must start a word ("unsupported" is not "support").
    escaped = regex.escape(keyword)
    if regex.match(r"\p{Latin}", keyword):
        return rf"(?<!\p{{Latin}}){escaped}"
    return escaped


_KEYWORDS = {k.casefold(): label for k, label in STANCE_KEYWORDS.items()}
_PATTERN = regex.compile(
    "|".join(_keyword_pattern(k) for k in sorted(_KEYWORDS, key=len, reverse=True)),
    regex.IGNORECASE,
)


def parse_stance_response(raw):
    """
    Map a free-text model response to a StanceLabel.

    The first stance keyword in the response wins (English support/against/
    neutral or Thai สนับสนุน/คัดค้าน/เป็นกลาง, case-insensitive).

    Raises:
        StanceParseError: When no keyword is present.
    """
    if raw is None or not raw.strip():
        raise StanceParseError(raw or "")
    match = _PATTERN.search(raw)
    if match is None:
        raise StanceParseError(raw)
    return _KEYWORDS[match.group(0).casefold()]
