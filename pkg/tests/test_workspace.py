import json

import numpy as np
import pytest

from kgexplain.embedding.encoders import HttpEncoder
from kgexplain.errors import ConfigError, SnapshotError
from kgexplain.kg.index_io import MANIFEST, load_index, read_manifest
from kgexplain.workspace import WorkspaceOperations

from conftest import toy_config_for


@pytest.fixture
def config(tmp_path):
    return toy_config_for(tmp_path / "index", tmp_path / "runs")


def _embedding(config, **values):
    return config.with_overrides({"embedding": values}).validate()


class TestOpen:

    def test_builds_missing_index(self, config):
        ws = WorkspaceOperations.open(config)
        manifest = read_manifest(config.data.index_dir)
        assert manifest["index_hash"] == config.index_hash()
        assert ws.store.layers == config.embedding.layers

    def test_missing_index_without_build(self, config):
        with pytest.raises(SnapshotError):
            WorkspaceOperations.open(config, build_if_missing=False)

    def test_fresh_index_is_reused(self, config, monkeypatch):
        WorkspaceOperations.build_index(config)

        def fail(*args, **kwargs):
            raise AssertionError("index rebuilt")

        monkeypatch.setattr(WorkspaceOperations, "build_index", staticmethod(fail))
        WorkspaceOperations.open(config.with_overrides({"retrieval": {"gamma": 0.2}}))

    def test_changed_embedding_settings_rebuild(self, config):
        WorkspaceOperations.build_index(config)
        changed = _embedding(config, layers=0, clusters=5)
        ws = WorkspaceOperations.open(changed)
        assert ws.store.layers == 0
        assert ws.clusters.k == 5
        np.testing.assert_allclose(np.linalg.norm(ws.store.aggregated, axis=1), 1.0, atol=1e-6)
        assert read_manifest(config.data.index_dir)["index_hash"] == changed.index_hash()

    def test_changed_seed_rebuilds(self, config):
        before = WorkspaceOperations.open(config).store.entity_vectors.copy()
        after = WorkspaceOperations.open(_embedding(config, seed=99))
        assert after.store.seed == 99
        assert not np.allclose(before, after.store.entity_vectors)

    def test_stale_index_without_build(self, config):
        WorkspaceOperations.build_index(config)
        with pytest.raises(SnapshotError, match="kgexplain index"):
            WorkspaceOperations.open(_embedding(config, seed=99), build_if_missing=False)


class TestLoadIndex:

    def _as_http_index(self, config):
        WorkspaceOperations.build_index(config)
        path = config.data.index_dir + "/" + MANIFEST
        with open(path, encoding="utf-8") as f:
            manifest = json.load(f)
        manifest["embedding"]["backend"] = "http"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest, f)
        return config.data.index_dir

    def test_http_index_needs_encoder_url(self, config):
        index_dir = self._as_http_index(config)
        with pytest.raises(ConfigError):
            load_index(index_dir)

    def test_http_index_with_encoder_url(self, config):
        index_dir = self._as_http_index(config)
        bundle = load_index(index_dir, encoder_url="http://localhost:8081/embed")
        assert isinstance(bundle.store.text_encoder, HttpEncoder)
        assert bundle.store.text_encoder.url == "http://localhost:8081/embed"
