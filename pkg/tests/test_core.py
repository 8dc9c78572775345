import json

import pytest

from stancelab.config import PipelineConfig
from stancelab.core import StanceLab, calibrated_name, run_pipeline, slug
from stancelab.errors import ConfigError
from stancelab.schema import Corpus, PredictionRecord
from stancelab.simulator import SimulatorBackend, SimulatorConfig


@pytest.fixture
def pipeline_config(bundled_paths, tmp_path):
    return PipelineConfig.from_file(bundled_paths["config"]).with_overrides(output_dir=tmp_path / "out")


@pytest.fixture
def lab(bundled_corpus):
    return StanceLab(bundled_corpus)


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_empty_corpus_is_refused(political_lexicon):
    with pytest.raises(ValueError):
        StanceLab(Corpus((), political_lexicon))


def test_generate_counterfactuals(lab):
    augmented = lab.generate_counterfactuals()
    assert len(augmented) == 810
    assert len(lab.cf_sets) == 270


def test_predict_and_evaluate(lab):
    backend = SimulatorBackend(SimulatorConfig(leakage_rate=0.0, base_accuracy=1.0), name="perfect")
    records = lab.predict(backend, None, config=None)
    assert len(records) == 810
    report = lab.evaluate("perfect")
    assert report.macro_f1 == 100.0
    assert report.rstd == 0.0
    assert report.cf_consistency == 100.0
    assert report.ood_per_entity == {"anan": 100.0, "busaba": 100.0, "chatchai": 100.0}


def test_calibrate_without_model_uses_consensus(lab):
    lab.generate_counterfactuals()
    lab.add_predictions("gold", [PredictionRecord.one_hot(ex.id, ex.stance, "replay") for ex in lab.augmented])
    records = lab.calibrate("gold")
    assert {r.backend for r in records} == {"consensus"}
    assert calibrated_name("gold") in lab.predictions


def test_fit_calibrate_evaluate(lab):
    lab.generate_counterfactuals()
    lab.add_predictions("biased", SimulatorBackend(
        SimulatorConfig(leakage_rate=0.5, entity_bias={"anan": ("against", 0.6)}, seed=2)
    ).predict_examples(list(lab.augmented)))
    model = lab.fit("biased")
    assert model.metadata["backend"] == "biased"
    lab.calibrate("biased", model)
    report = lab.evaluate(calibrated_name("biased"), calibrated_from="biased")
    assert report.system == "thaifactual (biased)"
    assert set(report.ood_per_entity) == {"anan", "busaba", "chatchai"}
    assert any("polarity" in flag for flag in report.flags)


def test_unknown_system(lab):
    with pytest.raises(ValueError, match="couldn't find predictions"):
        lab.evaluate("ghost")


def test_leaderboard_lists_evaluated_systems(lab):
    backend = SimulatorBackend(SimulatorConfig(seed=1), name="sim")
    lab.predict(backend, None, config=None)
    lab.evaluate("sim", ood=False)
    assert "| sim |" in lab.leaderboard()


def test_slug():
    assert slug("thaifactual (chat:gpt-4o)") == "thaifactual_chat_gpt-4o"


def test_config_resolves_paths_against_its_file(bundled_paths):
    config = PipelineConfig.from_file(bundled_paths["config"])
    assert config.corpus == bundled_paths["corpus"]
    assert config.polarity_lexicon == bundled_paths["polarity"]
    assert [b.name for b in config.backends] == ["simulator"]


def test_config_seed_override(pipeline_config):
    seeded = pipeline_config.with_overrides(seed=123)
    assert seeded.seed == 123
    assert seeded.train.seed == 123
    assert seeded.backends[0].simulator.seed == 123


@pytest.mark.parametrize("missing", ["corpus", "lexicon", "output_dir", "backends"])
def test_config_missing_key(missing):
    raw = {"corpus": "c.jsonl", "lexicon": "l.json", "output_dir": "out", "backends": [{"kind": "simulator"}]}
    del raw[missing]
    with pytest.raises(ConfigError, match=missing):
        PipelineConfig.from_dict(raw)


def test_config_rejects_duplicate_backends():
    raw = {"corpus": "c.jsonl", "lexicon": "l.json", "output_dir": "out",
           "backends": [{"kind": "simulator"}, {"kind": "simulator"}]}
    with pytest.raises(ConfigError, match="unique"):
        PipelineConfig.from_dict(raw)


def test_config_replay_needs_predictions():
    raw = {"corpus": "c.jsonl", "lexicon": "l.json", "output_dir": "out", "backends": [{"kind": "replay"}]}
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(raw)


def test_run_pipeline_writes_artifacts(pipeline_config):
    result = run_pipeline(pipeline_config)
    out = pipeline_config.output_dir
    assert [r.system for r in result.reports] == ["simulator", "thaifactual (simulator)"]
    for name in ("balance.json", "augmented_corpus.jsonl", "summary.json", "leaderboard.md",
                 "leaderboard.csv", "per_entity.csv", "predictions/simulator.jsonl",
                 "models/simulator.json", "reports/simulator.json"):
        assert (out / name).is_file(), name

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["seed"] == 0
    assert len(summary["systems"]) == 2
    leaderboard = (out / "leaderboard.md").read_text(encoding="utf-8")
    assert leaderboard.count("\n") == 4
    assert (out / "leaderboard.csv").read_bytes().count(b"\r\n") == 3


def test_run_pipeline_is_reproducible(pipeline_config, tmp_path):
    run_pipeline(pipeline_config)
    first = _tree(pipeline_config.output_dir)
    run_pipeline(pipeline_config)
    assert _tree(pipeline_config.output_dir) == first

    elsewhere = pipeline_config.with_overrides(output_dir=tmp_path / "again")
    run_pipeline(elsewhere)
    assert _tree(elsewhere.output_dir) == first
