"""Exact top-k search over a VectorIndex.

Similarity is the raw dot product (the default embedder family is
dot-product-tuned); results are always exact, never approximate, ordered by
(score descending, chunk_id ascending).

Two interchangeable backends compute the same result: a compiled kernel
(``irag._native.simkernel``, fused scoring + selection) and a numpy path
(matmul + lexsort). The kernel is picked at import time when the extension
built; ``IRAG_FORCE_FALLBACK=1`` pins the numpy path. ``benchmarks/
bench_search.py`` compares the two.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from irag.chunking import Chunk
from irag.errors import DimensionMismatchError
from irag.index.store import VectorIndex

try:
    from irag._native.simkernel import topk_dot as _native_topk
except ImportError:  # extension not built; numpy path covers everything
    _native_topk = None

NUMPY_BACKEND = "numpy"
NATIVE_BACKEND = "native"


@dataclass
class SearchHit:
    chunk_id: str
    score: float
    chunk: Chunk


def available_backends() -> list[str]:
    backends = [NUMPY_BACKEND]
    if _native_topk is not None:
        backends.insert(0, NATIVE_BACKEND)
    return backends


def default_backend() -> str:
    if _native_topk is None or os.environ.get("IRAG_FORCE_FALLBACK"):
        return NUMPY_BACKEND
    return NATIVE_BACKEND


def search(
    index: VectorIndex,
    query_vector: np.ndarray,
    k: int,
    backend: str | None = None,
) -> list[SearchHit]:
    """Exact top-k by dot product; returns min(k, len(index)) hits."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vector, dtype=np.float64).ravel()
    if query.shape[0] != index.dimension:
        raise DimensionMismatchError(
            f"query dimension {query.shape[0]} does not match index dimension "
            f"{index.dimension}"
        )
    if len(index) == 0:
        return []

    backend = backend or default_backend()
    if backend == NATIVE_BACKEND:
        if _native_topk is None:
            raise ValueError("native backend requested but the extension is not built")
        idx, scores = _native_topk(index.vectors, query, index.tie_ranks, k)
    elif backend == NUMPY_BACKEND:
        idx, scores = _numpy_topk(index.vectors, query, index.tie_ranks, k)
    else:
        raise ValueError(f"unknown search backend {backend!r}")

    return [
        SearchHit(
            chunk_id=index.chunks[i].chunk_id,
            score=float(score),
            chunk=index.chunks[i],
        )
        for i, score in zip(idx, scores)
    ]


def _numpy_topk(
    matrix: np.ndarray, query: np.ndarray, ranks: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    scores = matrix @ query  # float32 @ float64 -> float64
    order = np.lexsort((ranks, -scores))[: min(k, matrix.shape[0])]
    return order, scores[order]
