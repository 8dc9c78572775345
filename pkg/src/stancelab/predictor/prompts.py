import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import regex

from stancelab.constants import PROMPT_TEMPLATE_NAMES
from stancelab.errors import ConfigError
from stancelab.schema import resolve_entity

PLACEHOLDERS = ("{text}", "{target}")
_PLACEHOLDER = regex.compile(r"\{(text|target)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    def check(self):
        """Raise ConfigError unless each placeholder occurs exactly once."""
        for placeholder in PLACEHOLDERS:
            count = self.text.count(placeholder)
            if count != 1:
                raise ConfigError(
                    f"Template '{self.name}' must contain {placeholder} exactly once (found {count})."
                )
        return self


def load_template(name, templates_dir=None):
    """
    Load a prompt template by name from `templates_dir` or the shipped set.

    Args:
        name (str): One of raw, debias, cot.
        templates_dir (str or Path, optional): Directory holding <name>.txt overrides.

    Returns:
        PromptTemplate
    """
    if name not in PROMPT_TEMPLATE_NAMES:
        raise ConfigError(f"I don't know the prompt template '{name}'. Pick one of {list(PROMPT_TEMPLATE_NAMES)}.")
    if templates_dir is not None:
        text = (Path(templates_dir) / f"{name}.txt").read_text(encoding="utf-8")
    else:
        text = resources.files("stancelab.predictor").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate(name, text).check()


def render_prompt(template, example, lexicon):
    """
    Fill {text} with the example text and {target} with the target's canonical name.

    Substitution is a single pass, so braces inside the tweet are left alone.
    """
    template.check()
    entry = resolve_entity(lexicon, example.target_id)
    values = {"text": example.text, "target": entry.canonical}
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template.text)


def prompt_hash(prompt):
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
