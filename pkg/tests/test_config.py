from __future__ import annotations

import pytest

from irag.config import AppConfig, load_config
from irag.errors import ConfigError


def write_toml(tmp_path, text: str):
    path = tmp_path / "irag.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_without_any_source(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)  # no irag.toml here
    cfg = load_config(environ={})
    assert cfg == AppConfig()
    assert cfg.final_k == 15
    assert cfg.chunk_size == 1000 and cfg.overlap == 200


def test_file_values_are_read(tmp_path):
    path = write_toml(tmp_path, """
[gateway]
url = "http://models:9999"
chat_model = "m-chat"

[retrieval]
rewrites = 5
rerank_mode = "none"

[generation]
abstain_threshold = 0.5

[serve]
cors_origins = ["http://ui.example"]
""")
    cfg = load_config(config_path=path, environ={})
    assert cfg.gateway_url == "http://models:9999"
    assert cfg.chat_model == "m-chat"
    assert cfg.rewrites == 5
    assert cfg.rerank_mode == "none"
    assert cfg.abstain_threshold == 0.5
    assert cfg.cors_origins == ["http://ui.example"]


def test_env_overrides_file_and_flags_override_env(tmp_path):
    path = write_toml(tmp_path, '[gateway]\nurl = "http://from-file"\n')
    env_only = load_config(config_path=path, environ={"GATEWAY_URL": "http://from-env"})
    assert env_only.gateway_url == "http://from-env"
    flag_wins = load_config(
        config_path=path,
        environ={"GATEWAY_URL": "http://from-env"},
        overrides={"gateway_url": "http://from-flag"},
    )
    assert flag_wins.gateway_url == "http://from-flag"


def test_none_overrides_are_ignored(tmp_path):
    path = write_toml(tmp_path, '[gateway]\nurl = "http://from-file"\n')
    cfg = load_config(config_path=path, environ={}, overrides={"gateway_url": None})
    assert cfg.gateway_url == "http://from-file"


def test_missing_explicit_config_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(config_path=tmp_path / "absent.toml", environ={})


def test_invalid_toml_is_a_config_error(tmp_path):
    path = write_toml(tmp_path, "[gateway\nbroken")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(config_path=path, environ={})


def test_bad_rerank_mode_is_rejected(tmp_path):
    path = write_toml(tmp_path, '[retrieval]\nrerank_mode = "magic"\n')
    with pytest.raises(ConfigError, match="rerank_mode"):
        load_config(config_path=path, environ={})


def test_bad_env_timeout_is_a_config_error():
    with pytest.raises(ConfigError, match="GATEWAY_TIMEOUT_S"):
        load_config(environ={"GATEWAY_TIMEOUT_S": "soon"})


def test_implicit_cwd_config_is_picked_up(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_toml(tmp_path, '[serve]\nport = 9001\n')
    cfg = load_config(environ={})
    assert cfg.port == 9001
