"""Seeded, fully offline gateway double.

Embeddings are hash-derived unit vectors (no RNG library involved, so the
bytes are stable across platforms and library versions). Chat replies come
from, in order:

  1. a playbook: a JSON object of key -> response loaded from a file, where a
     key matches when it occurs as a substring of the composed prompt. Values:
       - string: returned verbatim (strings starting with "@" are directives:
         "@top_scale", "@bottom_scale", "@echo_match"; see below)
       - number: wrapped as a judge verdict {"score": n, "justification": ...}
       - list: consumed one element per matching call (the last element
         repeats once exhausted) -- the hook for retry/repair fixtures
  2. built-in deterministic behaviors recognizing the pipeline's own prompt
     markers (judge scale lines, rewrite requests, grounded-answer requests)
  3. a hash-derived fallback string.

"@top_scale" and "@bottom_scale" answer a judge call with the highest or
lowest allowed score, whatever the metric's scale is. "@echo_match" scores by
lexical overlap between the ANSWER and REFERENCE sections of the payload:
top of the scale when they overlap, bottom otherwise. It exists so
reference-sensitive metrics can be exercised without a live model.

Apart from list-valued playbook entries (which advance by design), replies
are a pure function of (seed, request): identical calls produce identical
bytes.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from irag.gateway.types import ChatRequest, ChatResponse

ECHO_MATCH_DIRECTIVE = "@echo_match"
TOP_SCALE_DIRECTIVE = "@top_scale"
BOTTOM_SCALE_DIRECTIVE = "@bottom_scale"
ECHO_MATCH_THRESHOLD = 0.3

_SCALE_RE = re.compile(r"Allowed scores:\s*([0-9\.,\s-]+)")
_REWRITE_N_RE = re.compile(r"Provide (\d+) alternative phrasings")
_QUESTION_RE = re.compile(r"^QUESTION:\s*(.*)$", re.MULTILINE)
_CHUNK_ID_RE = re.compile(r"\[CHUNK ([^\s|\]]+)")
_ANSWER_REF_RE = re.compile(r"ANSWER:\n(.*?)\n\nREFERENCE:\n(.*)\Z", re.DOTALL)
_TOKEN_RE = re.compile(r"[a-z0-9]{4,}")


def _digest_stream(seed_material: str, n_bytes: int) -> bytes:
    """Expand a sha256 chain over seed_material to n_bytes."""
    out = b""
    counter = 0
    while len(out) < n_bytes:
        out += hashlib.sha256(f"{seed_material}:{counter}".encode("utf-8")).digest()
        counter += 1
    return out[:n_bytes]


class MockGateway:
    """Deterministic stand-in for a chat+embeddings server."""

    def __init__(self, seed: int, dim: int = 16, playbook: dict | None = None):
        self.seed = seed
        self.dim = dim
        self.chat_model = f"mock-chat-{seed}"
        self.embed_model = f"mock-embed-{seed}-d{dim}"
        self.judge_model = f"mock-judge-{seed}"
        self.playbook = dict(playbook or {})
        self._playbook_cursor: dict[str, int] = {}
        # Longest key first so the most specific script wins.
        self._playbook_keys = sorted(self.playbook, key=lambda k: (-len(k), k))

    @classmethod
    def from_url(cls, url: str, dim: int = 16, playbook_path: str | None = None) -> "MockGateway":
        """Build from a ``mock:<seed>`` gateway URL."""
        seed_text = url.split(":", 1)[1] if ":" in url else "0"
        playbook = load_playbook(playbook_path) if playbook_path else None
        return cls(seed=int(seed_text), dim=dim, playbook=playbook)

    @property
    def embedder_id(self) -> str:
        return self.embed_model

    def is_reachable(self) -> bool:
        return True

    # -- embeddings ---------------------------------------------------------

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        if any(not t for t in texts):
            raise ValueError("embed requires every text to be non-empty")
        return np.stack([self._embed_one(t) for t in texts])

    def _embed_one(self, text: str) -> np.ndarray:
        raw = _digest_stream(f"embed:{self.seed}:{text}", 4 * self.dim)
        ints = np.frombuffer(raw, dtype="<u4").astype(np.float64)
        vec = ints / np.float64(2**32) * 2.0 - 1.0  # uniform in [-1, 1)
        vec /= np.linalg.norm(vec)
        return vec.astype(np.float32)

    # -- chat ---------------------------------------------------------------

    def chat(self, request: ChatRequest) -> ChatResponse:
        prompt = request.system_prompt + "\n" + request.user_prompt
        text = self._scripted_reply(prompt)
        if text is None:
            text = self._builtin_reply(prompt)
        return ChatResponse(text=text, model=request.model or self.chat_model, latency_ms=0)

    def _scripted_reply(self, prompt: str) -> str | None:
        for key in self._playbook_keys:
            if key not in prompt:
                continue
            value = self.playbook[key]
            if isinstance(value, list):
                cursor = self._playbook_cursor.get(key, 0)
                self._playbook_cursor[key] = cursor + 1
                value = value[min(cursor, len(value) - 1)]
            return self._render_value(value, prompt)
        return None

    def _render_value(self, value, prompt: str) -> str:
        if isinstance(value, bool):
            raise ValueError("playbook values must be strings, numbers, or lists")
        if isinstance(value, (int, float)):
            return json.dumps({"score": value, "justification": "scripted verdict"})
        if value == ECHO_MATCH_DIRECTIVE:
            return self._echo_match_reply(prompt)
        if value in (TOP_SCALE_DIRECTIVE, BOTTOM_SCALE_DIRECTIVE):
            scale = _parse_scale(prompt)
            if scale is None:
                raise ValueError(
                    f"{value} matched a prompt without an 'Allowed scores' line"
                )
            score = max(scale) if value == TOP_SCALE_DIRECTIVE else min(scale)
            return json.dumps({"score": score, "justification": "scripted verdict"})
        return str(value)

    def _echo_match_reply(self, prompt: str) -> str:
        scale = _parse_scale(prompt) or [0.0, 1.0]
        match = _ANSWER_REF_RE.search(prompt)
        overlap = 0.0
        if match:
            overlap = _token_overlap(match.group(1), match.group(2))
        score = max(scale) if overlap >= ECHO_MATCH_THRESHOLD else min(scale)
        return json.dumps(
            {"score": score, "justification": f"echo overlap {overlap:.2f}"}
        )

    def _builtin_reply(self, prompt: str) -> str:
        scale = _parse_scale(prompt)
        if scale is not None:
            return json.dumps(
                {"score": max(scale), "justification": "mock default verdict"}
            )

        rewrite = _REWRITE_N_RE.search(prompt)
        if rewrite:
            n = int(rewrite.group(1))
            question = _first_question(prompt) or "the original question"
            lines = [f"{i}. {question} (variant {i})" for i in range(1, n + 1)]
            return "\n".join(lines)

        if '"evidence"' in prompt and _QUESTION_RE.search(prompt):
            return self._grounded_answer(prompt)

        digest = hashlib.sha256(f"chat:{self.seed}:{prompt}".encode("utf-8")).hexdigest()
        return f"mock reply {digest[:12]}"

    def _grounded_answer(self, prompt: str) -> str:
        question = _first_question(prompt) or ""
        chunk_ids = _CHUNK_ID_RE.findall(prompt)
        cited = chunk_ids[:3]
        if cited:
            explanation = (
                f"Based on the retrieved issues ({', '.join(cited)}), here is what "
                f"the tracker records about: {question}"
            )
        else:
            explanation = "The retrieved issues do not cover this question."
        return json.dumps(
            {"query": question, "explanation": explanation, "evidence": cited}
        )


def load_playbook(path: str | Path) -> dict:
    """Load a key->response playbook; validates the value types."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"playbook {path} must be a JSON object of key -> response")
    for key, value in data.items():
        _check_playbook_value(key, value)
    return data


def _check_playbook_value(key: str, value) -> None:
    if isinstance(value, list):
        if not value:
            raise ValueError(f"playbook key {key!r} has an empty response list")
        for item in value:
            _check_playbook_value(key, item)
    elif isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ValueError(
            f"playbook key {key!r} has unsupported value type {type(value).__name__}"
        )


def _parse_scale(prompt: str) -> list[float] | None:
    match = _SCALE_RE.search(prompt)
    if not match:
        return None
    values = []
    for part in match.group(1).split(","):
        part = part.strip()
        if part:
            try:
                values.append(float(part))
            except ValueError:
                return None
    return values or None


def _first_question(prompt: str) -> str | None:
    match = _QUESTION_RE.search(prompt)
    return match.group(1).strip() if match else None


def _token_overlap(a: str, b: str) -> float:
    tokens_a = set(_TOKEN_RE.findall(a.lower()))
    tokens_b = set(_TOKEN_RE.findall(b.lower()))
    if not tokens_a or not tokens_b:
        return 0.0
    return len(tokens_a & tokens_b) / len(tokens_a | tokens_b)
