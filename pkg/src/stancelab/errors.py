"""
Exception hierarchy for stancelab.

Every error carries enough context (line number, example id, field name,
entity id) for the CLI to print an actionable message.
"""

from dataclasses import dataclass


class StanceLabError(Exception):
    """Base class for all stancelab errors."""


class CorpusParseError(StanceLabError, ValueError):
    def __init__(self, path, line_number, message):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}:{line_number}: I couldn't parse this line ({message}).")


@dataclass(frozen=True)
class FieldError:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


class ValidationError(StanceLabError, ValueError):
    def __init__(self, example_id, field_errors):
        self.example_id = example_id
        self.field_errors = list(field_errors)
        details = "; ".join(str(e) for e in self.field_errors)
        super().__init__(f"Record '{example_id}' failed validation: {details}")

    @property
    def fields(self):
        return [e.field for e in self.field_errors]


class UnknownEntityError(StanceLabError, ValueError):
    def __init__(self, entity_id, known=()):
        self.entity_id = entity_id
        known_txt = f" I only know these: {sorted(known)}." if known else ""
        super().__init__(f"I couldn't find entity '{entity_id}' in the lexicon.{known_txt}")


class NoMentionError(StanceLabError, ValueError):
    def __init__(self, example_id, target_id):
        self.example_id = example_id
        self.target_id = target_id
        super().__init__(
            f"Example '{example_id}' never mentions its target '{target_id}' by any alias, "
            "so there is nothing to substitute."
        )


class ConfigError(StanceLabError, ValueError):
    pass


class UndefinedMetricError(StanceLabError, ArithmeticError):
    def __init__(self, metric, detail):
        self.metric = metric
        self.detail = detail
        super().__init__(f"{metric} is undefined here: {detail}")


class UndefinedAgreementError(UndefinedMetricError):
    def __init__(self, detail="every annotation falls in a single category (expected agreement = 1)"):
        super().__init__("fleiss_kappa", detail)


class StanceParseError(StanceLabError, ValueError):
    def __init__(self, raw):
        self.raw = raw
        preview = raw if len(raw) <= 80 else raw[:77] + "..."
        super().__init__(f"I couldn't find a stance keyword in the response: {preview!r}")


class MissingPredictionError(StanceLabError, LookupError):
    def __init__(self, example_id, detail="no usable prediction"):
        self.example_id = example_id
        super().__init__(f"Example '{example_id}': {detail}.")


class CalibrationDivergenceError(StanceLabError, RuntimeError):
    pass


class ModelManifestError(StanceLabError, ValueError):
    pass
