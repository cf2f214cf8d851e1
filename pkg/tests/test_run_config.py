import json

import pytest

from config.run_config import NetworkConfig, RunConfig, load_run_config
from ensemble.schema import EvidenceKind, PriorKind
from errors import ConfigError, DataError
from ordering.schema import Backend, Strategy


def test_defaults():
    cfg = load_run_config()
    assert cfg.seed == 0
    assert cfg.hyperparams(5).hidden == 64
    assert cfg.control.prior is PriorKind.UNIFORM


def test_root_seed_and_jobs_propagate():
    cfg = RunConfig(seed=9, jobs=3)
    assert cfg.generate.seed == 9
    assert cfg.train.seed == 9
    assert cfg.ensemble.jobs == 3
    with pytest.raises(ConfigError):
        RunConfig(jobs=0)


def test_file_then_flags(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 4, "train": {"epochs": 5}, "control": {"evidence": "ci"}}))
    cfg = load_run_config(str(path))
    assert cfg.train.epochs == 5
    assert cfg.control.evidence is EvidenceKind.CI

    cfg = cfg.with_overrides(epochs=7, tau=1.5, seed=None, **{"stein.eta": 0.05})
    assert cfg.train.epochs == 7
    assert cfg.control.tau == 1.5
    assert cfg.seed == 4
    assert cfg.stein.eta == 0.05


def test_paired_ordering_flags():
    cfg = RunConfig().with_overrides(strategy="drop-column", backend="stein")
    assert cfg.ordering.backend is Backend.STEIN
    assert cfg.ordering.strategy is Strategy.DROP_COLUMN
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(backend="stein")


@pytest.mark.parametrize(
    "payload",
    [{"colour": 1}, {"train": {"epochz": 3}}, {"train": 3}, {"network": {"profile": "huge"}}, []],
    ids=["top-level", "section-key", "section-type", "profile", "not-object"],
)
def test_invalid_files(tmp_path, payload):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ConfigError):
        load_run_config(str(path))


def test_unknown_override():
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(colour="red")
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(**{"nosuch.field": 1})


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        load_run_config(str(tmp_path / "absent.json"))


def test_hash_is_stable_and_sensitive():
    assert RunConfig().config_hash() == RunConfig().config_hash()
    assert RunConfig().config_hash() != RunConfig(seed=1).config_hash()
    assert RunConfig.from_dict(RunConfig(seed=3).to_dict()).config_hash() == RunConfig(seed=3).config_hash()


def test_full_scale_profile():
    assert NetworkConfig(profile="synthetic").hyperparams(10).hidden == 1024
