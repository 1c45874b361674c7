"""Chunk embedding index: build, persist, and search."""
from irag.index.search import (
    SearchHit,
    available_backends,
    default_backend,
    search,
)
from irag.index.store import (
    DEFAULT_EMBED_BATCH,
    FORMAT_VERSION,
    MAGIC,
    VectorIndex,
    build_index,
    load_index,
    save_index,
)

__all__ = [
    "SearchHit",
    "VectorIndex",
    "MAGIC",
    "FORMAT_VERSION",
    "DEFAULT_EMBED_BATCH",
    "available_backends",
    "default_backend",
    "build_index",
    "load_index",
    "save_index",
    "search",
]
