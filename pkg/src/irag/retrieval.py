"""Multi-stage retrieval: rewrite, search, merge, deduplicate, rerank.

The pipeline never hard-fails on its optional stages. Rewriting degrades to
the original query alone; judge or external reranking degrades to normalized
embedding scores. Every degradation is recorded in the retrieval trace so a
fallback is never silent. With rewriting disabled and rerank mode "none" the
pipeline reduces to plain retrieve-and-read: the context order equals the raw
search order.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import requests

from irag.errors import GatewayError, JudgeInvalidError, RetrievalError
from irag.gateway.judge import judge
from irag.gateway.types import ChatRequest
from irag.chunking import Chunk
from irag.index.search import SearchHit, search
from irag.index.store import VectorIndex
from irag.ingest import normalize_text
from irag.prompts import load_prompt

logger = logging.getLogger(__name__)

FINAL_CONTEXT_SIZE = 15  # retrieval returns at most 15 chunks

RERANK_JUDGE = "judge"
RERANK_EXTERNAL = "external"
RERANK_NONE = "none"
RERANK_MODES = (RERANK_JUDGE, RERANK_EXTERNAL, RERANK_NONE)

_NUMBERED_LINE_RE = re.compile(r"^\s*(?:\d+[\.\)]\s*|[-*]\s+)?(.*?)\s*$")


@dataclass
class RetrievalConfig:
    rewrites: int = 3
    k_per_query: int = 10
    final_k: int = FINAL_CONTEXT_SIZE
    rerank_mode: str = RERANK_JUDGE
    rerank_url: str | None = None  # required for rerank_mode="external"

    def __post_init__(self):
        if self.rerank_mode not in RERANK_MODES:
            raise ValueError(f"unknown rerank_mode {self.rerank_mode!r}")
        if self.k_per_query < 1:
            raise ValueError("k_per_query must be >= 1")
        if self.rewrites < 0:
            raise ValueError("rewrites must be >= 0")


@dataclass
class QuerySet:
    original: str
    rewrites: list[str]


@dataclass
class RankedChunk:
    chunk: Chunk
    relevance: float  # in [0, 1]


@dataclass
class RetrievalTrace:
    """Per-stage candidate counts plus any degradation annotations."""

    formulations: list[str] = field(default_factory=list)
    per_query_hits: list[int] = field(default_factory=list)
    merged: int = 0
    after_dedup: int = 0
    after_rerank: int = 0
    rerank_mode: str = RERANK_NONE
    degraded: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "formulations": list(self.formulations),
            "per_query_hits": list(self.per_query_hits),
            "merged": self.merged,
            "after_dedup": self.after_dedup,
            "after_rerank": self.after_rerank,
            "rerank_mode": self.rerank_mode,
            "degraded": list(self.degraded),
        }


@dataclass
class RankedContext:
    query: str
    chunks: list[RankedChunk]
    trace: RetrievalTrace

    @property
    def top_relevance(self) -> float:
        return self.chunks[0].relevance if self.chunks else 0.0


# ---------------------------------------------------------------------------
# Query rewriting
# ---------------------------------------------------------------------------


def rewrite_query(query: str, n: int, gateway) -> QuerySet:
    """Ask the chat model for up to n alternate formulations.

    Gateway failures degrade to the original query alone; retrieval must not
    hard-fail because rewriting is unavailable.
    """
    queries, _failed = _rewrite_with_flag(query, n, gateway)
    return queries


def _rewrite_with_flag(query: str, n: int, gateway) -> tuple[QuerySet, bool]:
    if not query:
        raise ValueError("query must be non-empty")
    if n == 0:
        return QuerySet(original=query, rewrites=[]), False
    prompt = load_prompt("rewrite").format(n=n, query=query)
    try:
        response = gateway.chat(
            ChatRequest(model="", system_prompt="", user_prompt=prompt, temperature=0.2)
        )
    except GatewayError as exc:
        logger.warning("query rewriting failed, continuing with original only: %s", exc)
        return QuerySet(original=query, rewrites=[]), True
    return QuerySet(original=query, rewrites=_parse_rewrites(response.text, query, n)), False


def _parse_rewrites(text: str, original: str, n: int) -> list[str]:
    rewrites: list[str] = []
    for line in text.splitlines():
        cleaned = _NUMBERED_LINE_RE.match(line).group(1)
        if not cleaned or cleaned == original or cleaned in rewrites:
            continue
        rewrites.append(cleaned)
        if len(rewrites) == n:
            break
    return rewrites


# ---------------------------------------------------------------------------
# Candidate post-processing
# ---------------------------------------------------------------------------


def deduplicate(candidates: list[SearchHit]) -> list[SearchHit]:
    """Drop repeated chunk_ids (best score wins) and exact text duplicates.

    Output is sorted by (score desc, chunk_id asc); a chunk whose normalized
    text equals an already-kept chunk's is removed even under a distinct id.
    """
    ordered = sorted(candidates, key=lambda h: (-h.score, h.chunk_id))
    kept: list[SearchHit] = []
    seen_ids: set[str] = set()
    seen_texts: set[str] = set()
    for hit in ordered:
        if hit.chunk_id in seen_ids:
            continue
        text_key = normalize_text(hit.chunk.text)
        if text_key in seen_texts:
            continue
        seen_ids.add(hit.chunk_id)
        seen_texts.add(text_key)
        kept.append(hit)
    return kept


def rerank(
    query: str,
    candidates: list[SearchHit],
    mode: str,
    gateway,
    final_k: int = FINAL_CONTEXT_SIZE,
    rerank_url: str | None = None,
    trace_notes: list[str] | None = None,
) -> list[RankedChunk]:
    """Score candidates into [0, 1] relevance and keep the best final_k.

    mode="judge" scores each candidate with an LLM judge on a 0..10 scale;
    mode="external" calls a rerank HTTP endpoint; mode="none" min-max
    normalizes the embedding scores. Judge/external failures fall back to
    "none" and note the degradation in trace_notes.
    """
    if not candidates:
        return []
    if mode == RERANK_JUDGE:
        try:
            scored = _judge_scores(query, candidates, gateway)
        except (GatewayError, JudgeInvalidError) as exc:
            logger.warning("judge rerank failed, falling back to embedding order: %s", exc)
            if trace_notes is not None:
                trace_notes.append("rerank_fallback:judge->none")
            scored = _minmax_scores(candidates)
    elif mode == RERANK_EXTERNAL:
        try:
            scored = _external_scores(query, candidates, rerank_url, final_k)
        except (GatewayError, requests.RequestException) as exc:
            logger.warning("external rerank failed, falling back to embedding order: %s", exc)
            if trace_notes is not None:
                trace_notes.append("rerank_fallback:external->none")
            scored = _minmax_scores(candidates)
    elif mode == RERANK_NONE:
        scored = _minmax_scores(candidates)
    else:
        raise ValueError(f"unknown rerank mode {mode!r}")

    scored.sort(key=lambda pair: (-pair[1], pair[0].chunk_id))
    return [RankedChunk(chunk=hit.chunk, relevance=rel) for hit, rel in scored[:final_k]]


def _minmax_scores(candidates: list[SearchHit]) -> list[tuple[SearchHit, float]]:
    scores = [hit.score for hit in candidates]
    low, high = min(scores), max(scores)
    if high == low:
        return [(hit, 1.0) for hit in candidates]
    return [(hit, (hit.score - low) / (high - low)) for hit in candidates]


def _judge_scores(
    query: str, candidates: list[SearchHit], gateway
) -> list[tuple[SearchHit, float]]:
    instruction = load_prompt("judge_chunk_relevance")
    scale = [float(v) for v in range(11)]
    scored = []
    for hit in candidates:
        payload = f"QUESTION:\n{query}\n\nEXCERPT:\n{hit.chunk.text}"
        verdict = judge(gateway, instruction, payload, scale)
        scored.append((hit, verdict.score / 10.0))
    return scored


def _external_scores(
    query: str, candidates: list[SearchHit], rerank_url: str | None, top_n: int
) -> list[tuple[SearchHit, float]]:
    if not rerank_url:
        raise GatewayError("rerank_mode=external requires retrieval.rerank_url")
    response = requests.post(
        rerank_url.rstrip("/") + "/rerank",
        json={
            "query": query,
            "documents": [hit.chunk.text for hit in candidates],
            "top_n": top_n,
        },
        timeout=30,
    )
    if response.status_code != 200:
        raise GatewayError(
            "rerank endpoint failure", status=response.status_code, body=response.text
        )
    results = response.json().get("results")
    if not isinstance(results, list):
        raise GatewayError("rerank endpoint returned no results list")
    scored = []
    for item in results:
        position = int(item["index"])
        if not 0 <= position < len(candidates):
            raise GatewayError(f"rerank endpoint cited unknown candidate {position}")
        relevance = min(1.0, max(0.0, float(item["relevance_score"])))
        scored.append((candidates[position], relevance))
    return scored


# ---------------------------------------------------------------------------
# End-to-end retrieval
# ---------------------------------------------------------------------------


def retrieve(
    query: str, index: VectorIndex, gateway, cfg: RetrievalConfig | None = None
) -> RankedContext:
    """Run the full retrieval pipeline for one query."""
    cfg = cfg or RetrievalConfig()
    trace = RetrievalTrace(rerank_mode=cfg.rerank_mode)

    queries, rewrite_failed = _rewrite_with_flag(query, cfg.rewrites, gateway)
    if rewrite_failed:
        trace.degraded.append("rewrite_failed")
    formulations = [queries.original] + queries.rewrites
    trace.formulations = formulations

    try:
        vectors = gateway.embed(formulations)
    except GatewayError as exc:
        raise RetrievalError(f"query embedding failed: {exc}") from exc

    merged: list[SearchHit] = []
    for row in range(len(formulations)):
        hits = search(index, vectors[row], cfg.k_per_query)
        trace.per_query_hits.append(len(hits))
        merged.extend(hits)
    trace.merged = len(merged)

    deduped = deduplicate(merged)
    trace.after_dedup = len(deduped)

    ranked = rerank(
        query,
        deduped,
        cfg.rerank_mode,
        gateway,
        final_k=cfg.final_k,
        rerank_url=cfg.rerank_url,
        trace_notes=trace.degraded,
    )
    if any(note.startswith("rerank_fallback") for note in trace.degraded):
        trace.rerank_mode = RERANK_NONE
    trace.after_rerank = len(ranked)

    return RankedContext(query=query, chunks=ranked, trace=trace)
