"""Read-only HTTP service over one loaded index.

Endpoints (all JSON, UTF-8):

    POST /api/explain          {"query": "..."} -> ExplanationResult
    GET  /api/chunks/{id}      full chunk text + metadata
    GET  /api/health           index checksum, corpus size, gateway reachability

Errors are machine-readable: {"error": {"code": ..., "message": ...}} with
400 for bad requests, 404 for unknown chunks, 502 for gateway failures, and
503 while no index is loaded. The service never mutates the index.
"""
from __future__ import annotations

import logging

import jsonschema
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from irag.errors import GatewayError, GenerationError, IragError, RetrievalError
from irag.generation import GenerationConfig, explain_with_context, load_result_schema
from irag.index.store import VectorIndex
from irag.retrieval import RetrievalConfig

logger = logging.getLogger(__name__)

MAX_QUERY_CHARS = 2000


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def create_app(
    index: VectorIndex | None,
    gateway,
    retrieval_cfg: RetrievalConfig | None = None,
    generation_cfg: GenerationConfig | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="irag", docs_url=None, redoc_url=None)
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    schema_validator = jsonschema.Draft202012Validator(load_result_schema())
    state = {"index": index, "gateway": gateway}

    @app.post("/api/explain")
    async def explain(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "request body must be valid JSON")
        if not isinstance(body, dict) or not isinstance(body.get("query"), str):
            return _error(400, "bad_request", "body must carry a string field 'query'")
        query = body["query"].strip()
        if not query:
            return _error(400, "bad_request", "query must be non-empty")
        if len(query) > MAX_QUERY_CHARS:
            return _error(
                400, "bad_request", f"query exceeds {MAX_QUERY_CHARS} characters"
            )
        if state["index"] is None:
            return _error(503, "index_unavailable", "no index is loaded")

        try:
            result, _context = explain_with_context(
                query, state["index"], state["gateway"], retrieval_cfg, generation_cfg
            )
        except (GatewayError, RetrievalError) as exc:
            logger.error("explain failed on gateway/retrieval: %s", exc)
            return _error(502, "gateway_error", str(exc))
        except GenerationError as exc:
            logger.error("explain failed on generation: %s", exc)
            return _error(502, "generation_error", str(exc))
        except IragError as exc:
            logger.exception("explain failed")
            return _error(500, "internal_error", str(exc))

        payload = result.to_dict()
        schema_validator.validate(payload)
        return JSONResponse(status_code=200, content=payload)

    @app.get("/api/chunks/{chunk_id}")
    async def chunk_lookup(chunk_id: str):
        if state["index"] is None:
            return _error(503, "index_unavailable", "no index is loaded")
        chunk = state["index"].chunk_by_id(chunk_id)
        if chunk is None:
            return _error(404, "not_found", f"unknown chunk {chunk_id!r}")
        return JSONResponse(status_code=200, content=chunk.to_payload())

    @app.get("/api/health")
    async def health():
        idx = state["index"]
        gw = state["gateway"]
        reachable = bool(gw.is_reachable()) if hasattr(gw, "is_reachable") else False
        return JSONResponse(
            status_code=200,
            content={
                "status": "ok" if idx is not None else "degraded",
                "index": None
                if idx is None
                else {
                    "checksum": idx.source_checksum,
                    "chunks": len(idx),
                    "documents": len({c.doc_id for c in idx.chunks}),
                    "dimension": idx.dimension,
                    "embedder_id": idx.embedder_id,
                },
                "gateway": {"reachable": reachable, "chat_model": gw.chat_model},
            },
        )

    return app
