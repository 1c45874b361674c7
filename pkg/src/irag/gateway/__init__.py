"""Single boundary to all language-model capabilities.

A gateway exposes ``chat(ChatRequest) -> ChatResponse`` and
``embed(list[str]) -> float32 array``, plus ``chat_model`` / ``embed_model``
/ ``judge_model`` / ``embedder_id`` attributes. Two implementations ship:
:class:`HttpGateway` for real model servers and :class:`MockGateway` for
deterministic offline runs (selected with ``GATEWAY_URL=mock:<seed>``).
"""
from __future__ import annotations

import os

from irag.gateway.http import HttpGateway
from irag.gateway.judge import judge
from irag.gateway.mock import MockGateway, load_playbook
from irag.gateway.types import JSON_OBJECT, ChatRequest, ChatResponse, JudgeVerdict

__all__ = [
    "ChatRequest",
    "ChatResponse",
    "JudgeVerdict",
    "JSON_OBJECT",
    "HttpGateway",
    "MockGateway",
    "judge",
    "load_playbook",
    "gateway_from_url",
    "gateway_from_env",
]

DEFAULT_GATEWAY_URL = "http://localhost:11434"


def gateway_from_url(
    url: str,
    chat_model: str = "",
    embed_model: str = "",
    judge_model: str | None = None,
    timeout_s: float | None = None,
    playbook_path: str | None = None,
    mock_dim: int = 16,
):
    """Build a gateway from a URL; ``mock:<seed>`` selects the offline mock."""
    if url.startswith("mock:"):
        return MockGateway.from_url(url, dim=mock_dim, playbook_path=playbook_path)
    return HttpGateway(
        base_url=url,
        chat_model=chat_model or "llama3",
        embed_model=embed_model or "nomic-embed-text",
        judge_model=judge_model,
        timeout_s=timeout_s if timeout_s is not None else 120.0,
    )


def gateway_from_env(environ: dict | None = None):
    """Build a gateway from GATEWAY_* environment variables."""
    env = environ if environ is not None else os.environ
    return gateway_from_url(
        url=env.get("GATEWAY_URL", DEFAULT_GATEWAY_URL),
        chat_model=env.get("GATEWAY_CHAT_MODEL", ""),
        embed_model=env.get("GATEWAY_EMBED_MODEL", ""),
        judge_model=env.get("GATEWAY_JUDGE_MODEL") or None,
        timeout_s=float(env["GATEWAY_TIMEOUT_S"]) if env.get("GATEWAY_TIMEOUT_S") else None,
        playbook_path=env.get("GATEWAY_PLAYBOOK") or None,
    )
