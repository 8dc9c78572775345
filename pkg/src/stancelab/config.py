"""
Pipeline configuration loaded from a JSON document.

Relative paths are resolved against the directory of the config file.
"""

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from stancelab.calibration.rescorer import TrainConfig
from stancelab.constants import DEFAULT_TAU, PROMPT_TEMPLATE_NAMES
from stancelab.errors import ConfigError
from stancelab.predictor.backends import PredictorConfig
from stancelab.simulator.biased import SimulatorConfig

REQUIRED_KEYS = ("corpus", "lexicon", "output_dir", "backends")
_PREDICTOR_KEYS = (
    "endpoint", "model", "temperature", "max_in_flight", "retries", "backoff", "timeout", "cache_path", "api_key_env",
)


@dataclass(frozen=True)
class BackendSpec:
    """One predictor to evaluate, plus the inputs its kind needs."""
    predictor: PredictorConfig
    predictions: Optional[Path] = None
    simulator: Optional[SimulatorConfig] = None

    @property
    def name(self):
        return self.predictor.label

    def with_seed(self, seed):
        if self.simulator is None:
            return self
        return replace(self, simulator=self.simulator.with_seed(seed))


@dataclass(frozen=True)
class PipelineConfig:
    corpus: Path
    lexicon: Path
    output_dir: Path
    backends: tuple
    seed: int = 0
    template: str = "raw"
    templates_dir: Optional[Path] = None
    polarity_lexicon: Optional[Path] = None
    skip_empty_classes: bool = False
    bias_ssc_exclude_neutral: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    tau: float = DEFAULT_TAU
    trace: bool = False

    def __post_init__(self):
        if not self.backends:
            raise ConfigError("The pipeline config must list at least one backend.")
        if self.template not in PROMPT_TEMPLATE_NAMES:
            raise ConfigError(f"Unknown template '{self.template}'. Use one of {list(PROMPT_TEMPLATE_NAMES)}.")
        if not 0.5 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0.5, 1], got {self.tau}.")
        names = [b.name for b in self.backends]
        if len(set(names)) != len(names):
            raise ConfigError(f"Backend names must be unique, got {names}.")

    @classmethod
    def from_dict(cls, raw, base_dir="."):
        """
        Build a config from a parsed document.

        Raises:
            ConfigError: Missing required keys or invalid values.
        """
        if not isinstance(raw, dict):
            raise ConfigError("The pipeline config must be a JSON object.")
        missing = [key for key in REQUIRED_KEYS if not raw.get(key)]
        if missing:
            raise ConfigError(f"The pipeline config is missing {missing}.")
        base_dir = Path(base_dir)

        def path(value):
            if value is None:
                return None
            value = Path(value)
            return value if value.is_absolute() else base_dir / value

        seed = int(raw.get("seed", 0))
        calibration = dict(raw.get("calibration", {}))
        tau = float(calibration.pop("tau", DEFAULT_TAU))
        try:
            train = TrainConfig(seed=seed, **calibration)
        except TypeError as e:
            raise ConfigError(f"Bad calibration settings: {e}") from e

        backends = tuple(_backend_spec(spec, path, seed, bool(raw.get("trace", False))) for spec in raw["backends"])
        return cls(
            corpus=path(raw["corpus"]),
            lexicon=path(raw["lexicon"]),
            output_dir=path(raw["output_dir"]),
            backends=backends,
            seed=seed,
            template=raw.get("template", "raw"),
            templates_dir=path(raw.get("templates_dir")),
            polarity_lexicon=path(raw.get("polarity_lexicon")),
            skip_empty_classes=bool(raw.get("skip_empty_classes", False)),
            bias_ssc_exclude_neutral=bool(raw.get("bias_ssc_exclude_neutral", False)),
            train=train,
            tau=tau,
            trace=bool(raw.get("trace", False)),
        )

    @classmethod
    def from_file(cls, config_path):
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError(f"I couldn't find the config file {config_path}.")
        try:
            raw = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_path} is not valid JSON: {e}") from e
        return cls.from_dict(raw, base_dir=config_path.parent)

    def with_overrides(self, seed=None, output_dir=None, trace=None):
        """Apply CLI flags; a seed overrides the pipeline, training and every simulator seed."""
        config = self
        if seed is not None:
            config = replace(
                config,
                seed=seed,
                train=config.train.with_seed(seed),
                backends=tuple(b.with_seed(seed) for b in config.backends),
            )
        if output_dir is not None:
            config = replace(config, output_dir=Path(output_dir))
        if trace:
            config = replace(
                config,
                trace=True,
                backends=tuple(replace(b, predictor=replace(b.predictor, trace=True)) for b in config.backends),
            )
        return config


def _backend_spec(spec, path, seed, trace):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"Each backend needs at least a 'kind', got {spec!r}.")
    options = {key: spec[key] for key in _PREDICTOR_KEYS if key in spec}
    if "cache_path" in options:
        options["cache_path"] = str(path(options["cache_path"]))
    predictor = PredictorConfig(kind=spec["kind"], name=spec.get("name"), trace=trace, **options)

    simulator = None
    if predictor.kind == "simulator":
        settings = dict(spec.get("simulator", {}))
        settings.setdefault("seed", seed)
        try:
            simulator = SimulatorConfig.from_dict(settings)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Bad simulator settings for '{predictor.label}': {e}") from e

    predictions = path(spec.get("predictions"))
    if predictor.kind == "replay" and predictions is None:
        raise ConfigError(f"Replay backend '{predictor.label}' needs a 'predictions' file.")
    return BackendSpec(predictor=predictor, predictions=predictions, simulator=simulator)


def bundled_data_path(name):
    """Path of a file shipped in stancelab/data."""
    return Path(str(resources.files("stancelab").joinpath("data", name)))
