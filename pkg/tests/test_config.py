import logging

import pytest

from robustipw.config import DEFAULT_CONFIG, ENV_OVERRIDES, load_config
from robustipw.errors import ConfigurationError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in ("IPW_CONFIG", *ENV_OVERRIDES):
        monkeypatch.delenv(key, raising=False)


def write_ini(tmp_path, text):
    path = tmp_path / "config.ini"
    path.write_text(text)
    return str(path)


def test_shipped_config_matches_defaults():
    assert load_config() == DEFAULT_CONFIG


def test_file_values_are_typed(tmp_path):
    path = write_ini(tmp_path, "[subsampling]\nreplications = 500\nalpha = 0.1\nrefit_propensity = off\n"
                               "[trimming]\nmode = fixed\nfixed_b = 0.02\n")
    config = load_config(path)
    assert config['subsampling']['replications'] == 500
    assert config['subsampling']['alpha'] == 0.1
    assert config['subsampling']['refit_propensity'] is False
    assert config['trimming']['mode'] == "fixed"
    assert config['trimming']['fixed_b'] == 0.02
    assert config['bias_correction'] == DEFAULT_CONFIG['bias_correction']


def test_invalid_value(tmp_path):
    path = write_ini(tmp_path, "[subsampling]\nreplications = many\n")
    with pytest.raises(ConfigurationError, match="replications"):
        load_config(path)


def test_invalid_boolean(tmp_path):
    path = write_ini(tmp_path, "[bias_correction]\nenabled = perhaps\n")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_unknown_entries_are_ignored(tmp_path, caplog):
    path = write_ini(tmp_path, "[plotting]\ncolour = red\n[subsampling]\nworkers = 4\n")
    with caplog.at_level(logging.WARNING, logger="robustipw.config"):
        config = load_config(path)
    assert 'plotting' not in config
    assert 'workers' not in config['subsampling']
    assert "plotting" in caplog.text and "workers" in caplog.text


def test_missing_explicit_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(str(tmp_path / "absent.ini"))


def test_environment_overrides_file(tmp_path, monkeypatch):
    path = write_ini(tmp_path, "[subsampling]\nthreads = 2\n")
    monkeypatch.setenv("IPW_THREADS", "6")
    monkeypatch.setenv("IPW_DATA_DIR", "/tmp/nsw")
    config = load_config(path)
    assert config['subsampling']['threads'] == 6
    assert config['data']['data_dir'] == "/tmp/nsw"


def test_config_path_from_environment(tmp_path, monkeypatch):
    path = write_ini(tmp_path, "[estimation]\nestimand = att\n")
    monkeypatch.setenv("IPW_CONFIG", path)
    assert load_config()['estimation']['estimand'] == "att"


def test_defaults_are_not_mutated(tmp_path):
    path = write_ini(tmp_path, "[logging]\nlevel = DEBUG\n")
    load_config(path)
    assert DEFAULT_CONFIG['logging']['level'] == "INFO"
