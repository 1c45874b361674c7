"""Faithfulness-constrained explanation generation.

Builds the grounded prompt from a retrieval context, runs the chat model,
and validates the model's citations against that context: a cited chunk_id
that was never retrieved is dropped with a warning, so the emitted result
can only reference evidence that actually reached the prompt. When retrieval
comes back empty or too weak, the generator abstains without calling the
model at all.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Callable

from irag.errors import GenerationError
from irag.gateway.mock import MockGateway
from irag.gateway.types import JSON_OBJECT, ChatRequest
from irag.index.store import VectorIndex
from irag.prompts import NO_CONTEXT_MARKER, load_prompt
from irag.retrieval import RankedContext, RetrievalConfig, retrieve

logger = logging.getLogger(__name__)

EXCERPT_CHARS = 300
DEFAULT_ABSTAIN_THRESHOLD = 0.2
MAX_GENERATION_ATTEMPTS = 3  # first call plus up to 2 repair re-prompts

ABSTAIN_TEXT = (
    "No relevant information was found in the issue corpus for this query."
)

# Mock runs must be byte-reproducible, so they use a pinned timestamp.
MOCK_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)

_JSON_BLOB_RE = re.compile(r"\{.*\}", re.DOTALL)


@dataclass
class GenerationConfig:
    abstain_threshold: float = DEFAULT_ABSTAIN_THRESHOLD
    temperature: float = 0.2
    max_tokens: int = 1024
    clock: Callable[[], datetime] | None = None


@dataclass
class EvidenceItem:
    chunk_id: str
    issue_id: int
    source_url: str
    excerpt: str  # at most EXCERPT_CHARS characters
    relevance: float

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "issue_id": self.issue_id,
            "source_url": self.source_url,
            "excerpt": self.excerpt,
            "relevance": self.relevance,
        }


@dataclass
class ExplanationResult:
    query: str
    explanation: str
    evidence: list[EvidenceItem] = field(default_factory=list)
    context_found: bool = True
    model: str = ""
    generated_at: str = ""  # ISO-8601 UTC

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "explanation": self.explanation,
            "evidence": [item.to_dict() for item in self.evidence],
            "context_found": self.context_found,
            "model": self.model,
            "generated_at": self.generated_at,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, ensure_ascii=False)


def load_result_schema() -> dict:
    """The published ExplanationResult JSON schema (draft 2020-12)."""
    text = resources.files("irag").joinpath("schema/explanation-result.schema.json")
    return json.loads(text.read_text(encoding="utf-8"))


def build_prompt(query: str, context: RankedContext) -> tuple[str, str]:
    """Assemble (system_prompt, user_prompt) for one generation call.

    The system prompt is a versioned asset carrying the exclusivity
    constraint, the abstention instruction, and the output schema. The user
    prompt lists the context chunks in relevance order, each prefixed with
    its chunk_id and issue_id.
    """
    system_prompt = load_prompt("explain_system")
    if context.chunks:
        blocks = []
        for ranked in context.chunks:
            chunk = ranked.chunk
            issue_id = chunk.metadata.get("issue_id", "?")
            blocks.append(
                f"[CHUNK {chunk.chunk_id} | issue {issue_id} | "
                f"relevance {ranked.relevance:.3f}]\n{chunk.text}"
            )
        context_text = "\n\n".join(blocks)
    else:
        context_text = NO_CONTEXT_MARKER
    user_prompt = load_prompt("explain_user").format(query=query, context=context_text)
    return system_prompt, user_prompt


def should_abstain(context: RankedContext, threshold: float) -> bool:
    """Abstention rule: no chunks, or the best relevance is below threshold.

    Monotone in threshold by construction: raising it can only turn answers
    into abstentions, never the reverse.
    """
    return not context.chunks or context.top_relevance < threshold


def resolve_clock(gateway, clock: Callable[[], datetime] | None) -> Callable[[], datetime]:
    if clock is not None:
        return clock
    if isinstance(gateway, MockGateway):
        return lambda: MOCK_EPOCH
    return lambda: datetime.now(timezone.utc)


def generate_explanation(
    query: str,
    index: VectorIndex,
    gateway,
    retrieval_cfg: RetrievalConfig | None = None,
    generation_cfg: GenerationConfig | None = None,
) -> ExplanationResult:
    result, _context = explain_with_context(
        query, index, gateway, retrieval_cfg, generation_cfg
    )
    return result


def explain_with_context(
    query: str,
    index: VectorIndex,
    gateway,
    retrieval_cfg: RetrievalConfig | None = None,
    generation_cfg: GenerationConfig | None = None,
) -> tuple[ExplanationResult, RankedContext]:
    """Retrieve then generate; returns the retrieval context alongside."""
    gen_cfg = generation_cfg or GenerationConfig()
    clock = resolve_clock(gateway, gen_cfg.clock)
    context = retrieve(query, index, gateway, retrieval_cfg)

    if should_abstain(context, gen_cfg.abstain_threshold):
        result = ExplanationResult(
            query=query,
            explanation=ABSTAIN_TEXT,
            evidence=[],
            context_found=False,
            model=gateway.chat_model,
            generated_at=clock().isoformat(),
        )
        return result, context

    explanation, cited_ids = _generate_answer(query, context, gateway, gen_cfg)
    evidence = _resolve_evidence(cited_ids, context)
    result = ExplanationResult(
        query=query,
        explanation=explanation,
        evidence=evidence,
        context_found=True,
        model=gateway.chat_model,
        generated_at=clock().isoformat(),
    )
    return result, context


def _generate_answer(
    query: str, context: RankedContext, gateway, cfg: GenerationConfig
) -> tuple[str, list[str]]:
    system_prompt, user_prompt = build_prompt(query, context)
    prompt = user_prompt
    raw = ""
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        response = gateway.chat(
            ChatRequest(
                model="",
                system_prompt=system_prompt,
                user_prompt=prompt,
                temperature=cfg.temperature,
                max_tokens=cfg.max_tokens,
                response_format=JSON_OBJECT,
            )
        )
        raw = response.text
        parsed = _parse_answer(raw)
        if parsed is not None:
            return parsed
        logger.warning("generation attempt %d returned unparseable output", attempt + 1)
        prompt = (
            f"{user_prompt}\n\n"
            "Your previous reply was not a valid JSON object. Reply again with "
            'exactly one JSON object {"query": ..., "explanation": ..., '
            '"evidence": [...]} and nothing else.'
        )
    raise GenerationError(
        f"model produced no parseable answer in {MAX_GENERATION_ATTEMPTS} attempts",
        raw=raw,
    )


def _parse_answer(raw: str) -> tuple[str, list[str]] | None:
    data = None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError:
        match = _JSON_BLOB_RE.search(raw)
        if match:
            try:
                data = json.loads(match.group(0))
            except json.JSONDecodeError:
                return None
    if not isinstance(data, dict):
        return None
    explanation = data.get("explanation")
    if not isinstance(explanation, str) or not explanation.strip():
        return None
    evidence = data.get("evidence", [])
    if isinstance(evidence, str):
        evidence = [evidence]
    if not isinstance(evidence, list):
        return None
    cited: list[str] = []
    for item in evidence:
        if isinstance(item, dict):
            item = item.get("chunk_id")
        if isinstance(item, str) and item:
            cited.append(item)
    return explanation.strip(), cited


def _resolve_evidence(cited_ids: list[str], context: RankedContext) -> list[EvidenceItem]:
    """Map citations onto retrieved chunks, dropping anything not retrieved."""
    by_id = {ranked.chunk.chunk_id: ranked for ranked in context.chunks}
    items: list[EvidenceItem] = []
    seen: set[str] = set()
    for chunk_id in cited_ids:
        if chunk_id in seen:
            continue
        seen.add(chunk_id)
        ranked = by_id.get(chunk_id)
        if ranked is None:
            logger.warning(
                "dropping citation %r: not part of the retrieval context", chunk_id
            )
            continue
        chunk = ranked.chunk
        items.append(
            EvidenceItem(
                chunk_id=chunk.chunk_id,
                issue_id=int(chunk.metadata.get("issue_id", -1)),
                source_url=str(chunk.metadata.get("source_url", "")),
                excerpt=chunk.text[:EXCERPT_CHARS],
                relevance=ranked.relevance,
            )
        )
    items.sort(key=lambda item: (-item.relevance, item.chunk_id))
    return items
