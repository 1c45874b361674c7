"""JSON-over-HTTP gateway speaking the local-model-server wire contract.

Endpoints (see WIRE.md for the versioned contract):

    POST {base}/api/chat
        {"model", "messages": [{"role", "content"}], "options": {...},
         "format": "json"?, "stream": false}
        -> {"message": {"content": "..."}}

    POST {base}/api/embeddings
        {"model", "input": ["...", ...]}
        -> {"embeddings": [[...], ...]}

Transient transport failures and 5xx responses are retried up to 3 times
with exponential backoff (base 500 ms). A bounded semaphore caps concurrent
in-flight requests (default 4) to protect small local model servers.
"""
from __future__ import annotations

import logging
import threading
import time

import numpy as np
import requests

from irag.errors import GatewayError, GatewayTimeoutError
from irag.gateway.types import JSON_OBJECT, ChatRequest, ChatResponse

logger = logging.getLogger(__name__)

MAX_RETRIES = 3
BACKOFF_BASE_S = 0.5
DEFAULT_TIMEOUT_S = 120.0
DEFAULT_MAX_CONCURRENT = 4


class HttpGateway:
    """Client for a chat+embeddings server; shareable across threads."""

    def __init__(
        self,
        base_url: str,
        chat_model: str,
        embed_model: str,
        judge_model: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        max_concurrent: int = DEFAULT_MAX_CONCURRENT,
        session: requests.Session | None = None,
        sleeper=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.chat_model = chat_model
        self.embed_model = embed_model
        self.judge_model = judge_model or chat_model
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self._sleeper = sleeper
        self._slots = threading.BoundedSemaphore(max_concurrent)

    @property
    def embedder_id(self) -> str:
        return self.embed_model

    def chat(self, request: ChatRequest) -> ChatResponse:
        model = request.model or self.chat_model
        body = {
            "model": model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "options": {
                "temperature": request.temperature,
                "num_predict": request.max_tokens,
            },
            "stream": False,
        }
        if not request.system_prompt:
            body["messages"] = body["messages"][1:]
        if request.response_format == JSON_OBJECT:
            body["format"] = "json"

        started = time.monotonic()
        payload = self._post("/api/chat", body)
        latency_ms = int((time.monotonic() - started) * 1000)
        try:
            text = payload["message"]["content"]
        except (KeyError, TypeError) as exc:
            raise GatewayError(f"malformed chat response: missing {exc}") from exc
        return ChatResponse(text=text, model=model, latency_ms=latency_ms)

    def embed(self, texts: list[str]) -> np.ndarray:
        """Embed texts; returns a float32 array with one row per input."""
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        if any(not t for t in texts):
            raise ValueError("embed requires every text to be non-empty")
        payload = self._post("/api/embeddings", {"model": self.embed_model, "input": texts})
        vectors = payload.get("embeddings")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise GatewayError(
                f"embeddings response carries {len(vectors or [])} vectors "
                f"for {len(texts)} inputs"
            )
        try:
            return np.asarray(vectors, dtype=np.float32)
        except ValueError as exc:
            raise GatewayError(f"ragged embeddings response: {exc}") from exc

    def is_reachable(self) -> bool:
        try:
            self._session.get(self.base_url + "/", timeout=2)
            return True
        except requests.RequestException:
            return False

    # -- transport ---------------------------------------------------------

    def _post(self, path: str, body: dict) -> dict:
        url = self.base_url + path
        last_error: Exception | None = None
        for attempt in range(MAX_RETRIES + 1):
            if attempt:
                delay = BACKOFF_BASE_S * 2 ** (attempt - 1)
                logger.warning(
                    "gateway retry %d/%d for %s in %.1fs", attempt, MAX_RETRIES, path, delay
                )
                self._sleeper(delay)
            try:
                with self._slots:
                    response = self._session.post(url, json=body, timeout=self.timeout_s)
            except requests.Timeout as exc:
                raise GatewayTimeoutError(
                    f"gateway timed out after {self.timeout_s}s on {path}"
                ) from exc
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = GatewayError(
                    f"gateway error on {path}",
                    status=response.status_code,
                    body=response.text,
                )
                continue
            if response.status_code >= 300:
                raise GatewayError(
                    f"gateway rejected {path}",
                    status=response.status_code,
                    body=response.text,
                )
            try:
                return response.json()
            except ValueError as exc:
                raise GatewayError(f"gateway returned non-JSON body on {path}") from exc

        if isinstance(last_error, GatewayError):
            raise last_error
        raise GatewayError(f"gateway unreachable on {path} after {MAX_RETRIES} retries: {last_error}")
