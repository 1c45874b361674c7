"""Layered configuration: defaults < irag.toml < environment < CLI flags."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from irag.chunking import DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP
from irag.errors import ConfigError
from irag.generation import DEFAULT_ABSTAIN_THRESHOLD
from irag.retrieval import FINAL_CONTEXT_SIZE, RERANK_MODES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_CONFIG_FILE = "irag.toml"


@dataclass
class AppConfig:
    """Everything the CLI and service need, merged from all sources."""

    gateway_url: str = "http://localhost:11434"
    chat_model: str = ""
    embed_model: str = ""
    judge_model: str = ""
    timeout_s: float = 120.0
    playbook: str = ""

    rewrites: int = 3
    k_per_query: int = 10
    final_k: int = FINAL_CONTEXT_SIZE
    rerank_mode: str = "judge"
    rerank_url: str = ""

    abstain_threshold: float = DEFAULT_ABSTAIN_THRESHOLD
    generation_temperature: float = 0.2

    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_OVERLAP
    embed_batch: int = 32

    index_path: str = ""
    host: str = "127.0.0.1"
    port: int = 8080
    cors_origins: list[str] = field(default_factory=list)


_SECTIONS = {
    "gateway": {
        "url": ("gateway_url", str),
        "chat_model": ("chat_model", str),
        "embed_model": ("embed_model", str),
        "judge_model": ("judge_model", str),
        "timeout_s": ("timeout_s", float),
        "playbook": ("playbook", str),
    },
    "retrieval": {
        "rewrites": ("rewrites", int),
        "k_per_query": ("k_per_query", int),
        "final_k": ("final_k", int),
        "rerank_mode": ("rerank_mode", str),
        "rerank_url": ("rerank_url", str),
    },
    "generation": {
        "abstain_threshold": ("abstain_threshold", float),
        "temperature": ("generation_temperature", float),
    },
    "chunking": {
        "chunk_size": ("chunk_size", int),
        "overlap": ("overlap", int),
        "embed_batch": ("embed_batch", int),
    },
    "index": {
        "path": ("index_path", str),
    },
    "serve": {
        "host": ("host", str),
        "port": ("port", int),
        "cors_origins": ("cors_origins", list),
    },
}


def load_config(
    config_path: str | Path | None = None,
    environ: dict | None = None,
    overrides: dict | None = None,
) -> AppConfig:
    """Merge configuration sources; flags (overrides) win over env over file.

    When no explicit path is given, ``irag.toml`` in the working directory is
    used if present.
    """
    cfg = AppConfig()
    path = Path(config_path) if config_path else Path(DEFAULT_CONFIG_FILE)
    if config_path or path.is_file():
        _apply_file(cfg, path)
    _apply_env(cfg, environ if environ is not None else os.environ)
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    if cfg.rerank_mode not in RERANK_MODES:
        raise ConfigError(f"unknown retrieval.rerank_mode {cfg.rerank_mode!r}")
    return cfg


def _apply_file(cfg: AppConfig, path: Path) -> None:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    for section, keys in _SECTIONS.items():
        block = data.get(section, {})
        if not isinstance(block, dict):
            raise ConfigError(f"[{section}] in {path} must be a table")
        for key, (attr, cast) in keys.items():
            if key in block:
                try:
                    value = block[key] if cast is list else cast(block[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{section}.{key} in {path}: {exc}") from exc
                setattr(cfg, attr, value)


def _apply_env(cfg: AppConfig, environ) -> None:
    if environ.get("GATEWAY_URL"):
        cfg.gateway_url = environ["GATEWAY_URL"]
    if environ.get("GATEWAY_CHAT_MODEL"):
        cfg.chat_model = environ["GATEWAY_CHAT_MODEL"]
    if environ.get("GATEWAY_EMBED_MODEL"):
        cfg.embed_model = environ["GATEWAY_EMBED_MODEL"]
    if environ.get("GATEWAY_JUDGE_MODEL"):
        cfg.judge_model = environ["GATEWAY_JUDGE_MODEL"]
    if environ.get("GATEWAY_TIMEOUT_S"):
        try:
            cfg.timeout_s = float(environ["GATEWAY_TIMEOUT_S"])
        except ValueError as exc:
            raise ConfigError(f"GATEWAY_TIMEOUT_S: {exc}") from exc
    if environ.get("GATEWAY_PLAYBOOK"):
        cfg.playbook = environ["GATEWAY_PLAYBOOK"]
