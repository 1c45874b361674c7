"""Structured judging on top of any chat gateway.

A judge call fixes temperature at 0.3, requests a JSON object, and insists on
``{"score": s, "justification": j}`` with ``s`` drawn from the caller's
scale. Unparseable or out-of-scale replies trigger a repair re-prompt, up to
three attempts in total.
"""
from __future__ import annotations

import json
import logging
import re

from irag.errors import JudgeInvalidError
from irag.gateway.types import JSON_OBJECT, ChatRequest, JudgeVerdict

logger = logging.getLogger(__name__)

JUDGE_TEMPERATURE = 0.3
MAX_JUDGE_ATTEMPTS = 3

_JSON_BLOB_RE = re.compile(r"\{.*\}", re.DOTALL)
_FENCE_RE = re.compile(r"```(?:json)?|```", re.IGNORECASE)


def format_scale(scale: list[float]) -> str:
    return ", ".join(_format_number(v) for v in scale)


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


def judge(
    gateway,
    instruction: str,
    payload: str,
    scale: list[float],
    model: str | None = None,
) -> JudgeVerdict:
    """Run one judge call; raises JudgeInvalidError after exhausted repairs."""
    if not scale:
        raise ValueError("judge scale must be non-empty")

    system_prompt = (
        f"{instruction}\n\n"
        f"Allowed scores: {format_scale(scale)}\n"
        'Respond with a single JSON object of the form '
        '{"score": <one of the allowed scores>, "justification": "<short reason>"} '
        "and nothing else."
    )
    user_prompt = payload
    raw = ""
    for attempt in range(MAX_JUDGE_ATTEMPTS):
        response = gateway.chat(
            ChatRequest(
                model=model or getattr(gateway, "judge_model", ""),
                system_prompt=system_prompt,
                user_prompt=user_prompt,
                temperature=JUDGE_TEMPERATURE,
                response_format=JSON_OBJECT,
            )
        )
        raw = response.text
        verdict = _parse_verdict(raw, scale)
        if verdict is not None:
            return verdict
        logger.warning("judge attempt %d produced no in-scale verdict", attempt + 1)
        user_prompt = (
            f"{payload}\n\n"
            "Your previous reply could not be used. Reply again with exactly one "
            f'JSON object {{"score": s, "justification": "..."}} where s is one '
            f"of: {format_scale(scale)}."
        )
    raise JudgeInvalidError(
        f"judge returned no valid verdict in {MAX_JUDGE_ATTEMPTS} attempts", raw=raw
    )


def _parse_verdict(raw: str, scale: list[float]) -> JudgeVerdict | None:
    data = _extract_json(raw)
    if not isinstance(data, dict) or "score" not in data:
        return None
    score = _coerce_number(data["score"])
    if score is None:
        return None
    for allowed in scale:
        if abs(score - float(allowed)) < 1e-9:
            return JudgeVerdict(
                score=float(allowed),
                justification=str(data.get("justification", "")),
                raw=raw,
            )
    return None


def _extract_json(raw: str):
    text = _FENCE_RE.sub("", raw).strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    match = _JSON_BLOB_RE.search(text)
    if match:
        try:
            return json.loads(match.group(0))
        except json.JSONDecodeError:
            return None
    return None


def _coerce_number(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None
    return None
