"""Request/response types shared by every gateway implementation."""
from __future__ import annotations

import math
from dataclasses import dataclass

FREE_TEXT = "free_text"
JSON_OBJECT = "json_object"


@dataclass
class ChatRequest:
    model: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.2
    max_tokens: int = 1024
    response_format: str = FREE_TEXT

    def __post_init__(self):
        if not math.isfinite(self.temperature) or not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be finite in [0, 2], got {self.temperature}")
        if not self.user_prompt:
            raise ValueError("user_prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.response_format not in (FREE_TEXT, JSON_OBJECT):
            raise ValueError(f"unknown response_format {self.response_format!r}")


@dataclass
class ChatResponse:
    text: str
    model: str
    latency_ms: int = 0


@dataclass
class JudgeVerdict:
    """A parsed judge reply; ``raw`` keeps the verbatim model output."""

    score: float
    justification: str
    raw: str
