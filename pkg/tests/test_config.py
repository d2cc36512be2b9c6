import pytest

from pvguard.config import (
    AdapterSettings,
    PipelineConfig,
    Seeds,
    config_from_dict,
    config_to_dict,
    dump_toml,
    load_config,
    parse_threshold,
)
from pvguard.errors import ConfigError

SAMPLE = """
lexicon_path = ""
cache_path = ""
k = 2
dluq_threshold = "calibrated:0.05"
tluq_mode = "per_document"
instruction = "Translate the following case report into English narrative text"
output_dir = "out"

[adapter]
type = "mock"
profile = "noisy"

[seeds]
adapter = 7
corpus = 8
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(SAMPLE, encoding="utf-8")
    return path


class TestLoad:
    def test_basic_load(self, config_path):
        config = load_config(config_path, env={})
        assert config.k == 2
        assert config.adapter.profile == "noisy"
        assert config.seeds == Seeds(adapter=7, corpus=8)

    def test_env_overrides(self, config_path):
        config = load_config(config_path, env={
            "PVG_K": "5",
            "PVG_ADAPTER_PROFILE": "separable",
            "PVG_DLUQ_THRESHOLD": "0.75",
            "PVG_SEEDS_ADAPTER": "99",
        })
        assert config.k == 5
        assert config.adapter.profile == "separable"
        assert config.dluq_threshold == 0.75
        assert config.seeds.adapter == 99

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml", env={})

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("k = = 2", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path, env={})

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("mystery = 1", encoding="utf-8")
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config(path, env={})


class TestValidate:
    def test_paths_checked(self, tmp_path):
        config = PipelineConfig(lexicon_path=str(tmp_path / "absent.tsv"))
        with pytest.raises(ConfigError, match="absent.tsv"):
            config.validate()

    def test_http_requires_endpoint(self):
        with pytest.raises(ConfigError, match="endpoint"):
            PipelineConfig(adapter=AdapterSettings(type="http")).validate(check_paths=False)

    def test_exactly_one_adapter(self):
        bad = AdapterSettings(type="mock", endpoint="http://example")
        with pytest.raises(ConfigError, match="exactly one adapter"):
            PipelineConfig(adapter=bad).validate(check_paths=False)

    def test_global_mode_needs_thresholds(self):
        with pytest.raises(ConfigError, match="tluq_global_thresholds"):
            PipelineConfig(tluq_mode="global").validate(check_paths=False)

    def test_k_positive(self):
        with pytest.raises(ConfigError, match="k must be"):
            PipelineConfig(k=0).validate(check_paths=False)


class TestThresholdParsing:
    def test_fixed(self):
        assert parse_threshold(0.5) == (0.5, None)

    def test_calibrated(self):
        assert parse_threshold("calibrated:0.1") == (None, 0.1)

    def test_bad_values(self):
        for value in ("calibrated:x", "calibrated:0", "0.5", True, None):
            with pytest.raises(ConfigError):
                parse_threshold(value)


class TestDumpRoundTrip:
    def test_dump_reparses_equivalent(self, tmp_path):
        config = PipelineConfig(
            adapter=AdapterSettings(type="mock", profile="noisy"),
            k=3,
            dluq_threshold="calibrated:0.02",
            tluq_mode="global",
            tluq_global_thresholds=(1.0, 2.0, 3.0),
            review_entropy_threshold=2.5,
            seeds=Seeds(adapter=11, corpus=12),
            output_dir="elsewhere",
        )
        path = tmp_path / "dumped.toml"
        path.write_text(dump_toml(config), encoding="utf-8")
        assert load_config(path, env={}) == config

    def test_dict_round_trip(self):
        config = PipelineConfig(dluq_threshold=0.5)
        assert config_from_dict(config_to_dict(config)) == config
