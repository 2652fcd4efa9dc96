from pathlib import Path

import pytest

from kgexplain.config.constants import ENV_COMPLETION_URL
from kgexplain.config.settings import EngineConfig, load_config
from kgexplain.errors import ConfigError

from conftest import TOY_CONFIG, TOY_DIR


def _write(tmp_path: Path, body: str) -> Path:
    path = tmp_path / "config.toml"
    path.write_text(body, encoding="utf-8")
    return path


class TestLoadConfig:

    def test_defaults_without_file(self):
        assert load_config() == EngineConfig()

    def test_relative_paths_resolve_against_file(self):
        config = load_config(str(TOY_CONFIG))
        assert Path(config.data.triples) == (TOY_DIR / "triples.tsv").resolve()
        assert Path(config.data.index_dir) == (TOY_DIR / "../../build/index").resolve()
        assert config.embedding.dim == 64
        assert config.retrieval.gamma == 0.6

    def test_literal_system_instruction_kept(self, tmp_path):
        config = load_config(str(_write(tmp_path, '[generation]\nsystem_instruction = "Be brief."\n')))
        assert config.generation.system_instruction == "Be brief."

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.toml"))

    def test_unparsable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(_write(tmp_path, "[retrieval\n")))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="Unknown config section"):
            load_config(str(_write(tmp_path, "[telemetry]\nenabled = true\n")))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="Unknown key"):
            load_config(str(_write(tmp_path, "[retrieval]\nbeam = 4\n")))


class TestValidate:

    @pytest.mark.parametrize("section, values", [
        ("retrieval", {"gamma": 1.5}),
        ("retrieval", {"max_hops": 4}),
        ("retrieval", {"top_n": 0}),
        ("retrieval", {"temperature": 0.0}),
        ("retrieval", {"strategy": "random"}),
        ("embedding", {"dim": 1}),
        ("embedding", {"clusters": 1}),
        ("embedding", {"backend": "file"}),
        ("specificity", {"struct": 0.5}),
        ("evaluation", {"tau": -0.1}),
        ("evaluation", {"encoder_backend": "file"}),
        ("generation", {"backend": "gpt"}),
    ])
    def test_invalid(self, section, values):
        with pytest.raises(ConfigError):
            EngineConfig().with_overrides({section: values}).validate()

    def test_http_generation_needs_url(self, monkeypatch):
        monkeypatch.delenv(ENV_COMPLETION_URL, raising=False)
        config = EngineConfig().with_overrides({"generation": {"backend": "http"}})
        with pytest.raises(ConfigError):
            config.validate()
        monkeypatch.setenv(ENV_COMPLETION_URL, "http://localhost:8080/complete")
        assert config.validate().completion_url == "http://localhost:8080/complete"

    def test_bad_jobs(self):
        with pytest.raises(ConfigError):
            EngineConfig(jobs=0).validate()


class TestOverrides:

    def test_none_values_ignored(self):
        config = EngineConfig().with_overrides({"retrieval": {"gamma": None, "top_n": 3}, "jobs": None})
        assert config.retrieval.gamma == EngineConfig().retrieval.gamma
        assert config.retrieval.top_n == 3
        assert config.jobs is None

    def test_unknown_override_key(self):
        with pytest.raises(ConfigError):
            EngineConfig().with_overrides({"retrieval": {"beam": 4}})


class TestConfigHash:

    def test_stable(self):
        assert EngineConfig().config_hash() == EngineConfig().config_hash()
        assert len(EngineConfig().config_hash()) == 10

    def test_ignores_secrets_and_parallelism(self):
        base = EngineConfig()
        other = base.with_overrides({"generation": {"token": "secret"}, "jobs": 8})
        assert other.config_hash() == base.config_hash()

    def test_independent_of_directory(self, tmp_path):
        hashes = set()
        for name in ("a", "b"):
            base = tmp_path / name / "nested"
            base.mkdir(parents=True)
            for data_file in ("triples.tsv", "items.jsonl", "users.jsonl", "eval_corpus.jsonl", "config.toml"):
                (base / data_file).write_bytes((TOY_DIR / data_file).read_bytes())
            config = load_config(str(base / "config.toml"))
            hashes.add((config.config_hash(), config.index_hash()))
        assert len(hashes) == 1

    def test_tracks_input_contents(self, tmp_path):
        triples = tmp_path / "triples.tsv"
        triples.write_text("a\tr\tb\n", encoding="utf-8")
        config = EngineConfig().with_overrides({"data": {"triples": str(triples)}})
        before = (config.config_hash(), config.index_hash())
        triples.write_text("a\tr\tc\n", encoding="utf-8")
        after = (config.config_hash(), config.index_hash())
        assert before[0] != after[0]
        assert before[1] != after[1]

    def test_index_hash_follows_embedding_only(self):
        base = EngineConfig()
        assert base.with_overrides({"retrieval": {"gamma": 0.1}}).index_hash() == base.index_hash()
        assert base.with_overrides({"embedding": {"seed": 99}}).index_hash() != base.index_hash()
        assert base.with_overrides({"data": {"index_dir": "/elsewhere"}}).index_hash() == base.index_hash()

    def test_tracks_settings(self):
        assert EngineConfig().with_overrides({"retrieval": {"gamma": 0.1}}).config_hash() != EngineConfig().config_hash()
