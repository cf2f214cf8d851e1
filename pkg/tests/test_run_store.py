import json

import pytest

from database.run_store import PROVIDER_RESPONSES, RunStore
from errors import ConfigError, DataError


def _store(path, **kwargs):
    return RunStore(str(path), "order", {"seed": 1, "train": {"epochs": 2}}, seed=1, **kwargs)


def test_manifest_and_config_echo(tmp_path):
    out = tmp_path / "run"
    store = _store(out)
    store.save_artifact_json("order.json", {"topological_order": ["a"]})
    store.set("n_edges", 3)
    manifest = store.finalize()

    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk == manifest
    assert manifest["command"] == "order"
    assert manifest["seed"] == 1
    assert manifest["artifacts"] == ["order.json"]
    assert manifest["n_edges"] == 3
    assert manifest["degraded"] is False
    assert len(manifest["config_sha256"]) == 64
    assert store.run_id == manifest["config_sha256"][:12]
    assert json.loads((out / "config.json").read_text())["train"]["epochs"] == 2


def test_non_empty_directory_needs_overwrite(tmp_path):
    (tmp_path / "old.txt").write_text("x")
    with pytest.raises(ConfigError):
        _store(tmp_path)
    _store(tmp_path, overwrite=True)


def test_output_path_that_is_a_file(tmp_path):
    target = tmp_path / "file"
    target.write_text("x")
    with pytest.raises(DataError):
        _store(target)


def test_degraded_runs_keep_reasons(tmp_path):
    store = _store(tmp_path / "run")
    store.mark_degraded("provider down at step 0")
    store.save_provider_responses([{"step": 0}], {"wet": "qzxv"})
    manifest = store.finalize()
    assert manifest["degraded"] is True
    assert manifest["warnings"] == ["provider down at step 0"]
    assert PROVIDER_RESPONSES in manifest["artifacts"]
    saved = json.loads((tmp_path / "run" / PROVIDER_RESPONSES).read_text())
    assert saved == {"records": [{"step": 0}], "aliases": {"wet": "qzxv"}}


def test_manifest_copy_is_detached(tmp_path):
    store = _store(tmp_path / "run")
    snapshot = store.manifest
    snapshot["artifacts"].append("bogus")
    assert store.manifest["artifacts"] == []
