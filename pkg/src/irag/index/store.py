"""Persistent exact vector index.

File format (versioned, little-endian; extension ``.iragidx``):

    magic            8 bytes  b"IRAGIDX1"
    format_version   u32
    dimension        u32
    count            u64      number of entries
    embedder_len     u32      followed by that many UTF-8 bytes
    payload_len      u64      followed by that many bytes: exactly `count`
                              newline-terminated JSON chunk payloads
    vectors          count * dimension * 4 bytes of float32

The header is auditable with `xxd`, the payload greppable, and the vector
block a single contiguous slab. Loading is strict: any truncation or
inconsistency raises a typed integrity error naming the offending section.
"""
from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from irag.chunking import Chunk
from irag.errors import (
    DimensionMismatchError,
    EmptyCorpusError,
    GatewayError,
    IndexFormatError,
    IndexIntegrityError,
    IndexVersionError,
)

logger = logging.getLogger(__name__)

MAGIC = b"IRAGIDX1"
FORMAT_VERSION = 1
DEFAULT_EMBED_BATCH = 32

_HEADER = struct.Struct("<IIQ")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass
class VectorIndex:
    """Immutable after construction; safe to share across searchers."""

    dimension: int
    embedder_id: str
    chunks: list[Chunk]
    vectors: np.ndarray  # (count, dimension) float32; row i belongs to chunks[i]
    format_version: int = FORMAT_VERSION
    source_checksum: str | None = None

    _by_id: dict = field(init=False, repr=False, default=None)
    _tie_ranks: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape != (len(self.chunks), self.dimension):
            raise IndexIntegrityError(
                f"vector block shape {self.vectors.shape} does not match "
                f"{len(self.chunks)} chunks of dimension {self.dimension}",
                section="vector block",
            )
        self._by_id = {}
        for chunk in self.chunks:
            if chunk.chunk_id in self._by_id:
                raise IndexIntegrityError(
                    f"duplicate chunk_id {chunk.chunk_id!r}", section="chunk payload"
                )
            self._by_id[chunk.chunk_id] = chunk

    def __len__(self) -> int:
        return len(self.chunks)

    def chunk_by_id(self, chunk_id: str) -> Chunk | None:
        return self._by_id.get(chunk_id)

    @property
    def tie_ranks(self) -> np.ndarray:
        """Position of each entry in lexicographic chunk_id order.

        Search tie-breaking is (score desc, chunk_id asc); the kernel works on
        integer ranks, so the string order is materialized once.
        """
        if self._tie_ranks is None:
            ids = [c.chunk_id for c in self.chunks]
            order = sorted(range(len(ids)), key=ids.__getitem__)
            ranks = np.empty(len(ids), dtype=np.int64)
            for position, i in enumerate(order):
                ranks[i] = position
            self._tie_ranks = ranks
        return self._tie_ranks


def build_index(
    chunks: list[Chunk], gateway, batch_size: int = DEFAULT_EMBED_BATCH
) -> VectorIndex:
    """Embed chunks through the gateway and assemble the index.

    Requests are batched; the vector dimension is read from the first batch
    and enforced on all later ones.
    """
    if not chunks:
        raise EmptyCorpusError("empty corpus: no chunks to index")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")

    blocks: list[np.ndarray] = []
    dimension: int | None = None
    for offset in range(0, len(chunks), batch_size):
        batch = chunks[offset : offset + batch_size]
        try:
            block = gateway.embed([c.text for c in batch])
        except GatewayError as exc:
            done = sum(b.shape[0] for b in blocks)
            raise GatewayError(
                f"index build aborted after embedding {done}/{len(chunks)} chunks: {exc}"
            ) from exc
        if dimension is None:
            dimension = int(block.shape[1])
        elif int(block.shape[1]) != dimension:
            raise DimensionMismatchError(
                f"embedding batch at offset {offset} has dimension {block.shape[1]}, "
                f"expected {dimension}",
                section="vector block",
            )
        blocks.append(block.astype(np.float32, copy=False))

    vectors = np.vstack(blocks)
    logger.info(
        "built index: %d chunks, dimension %d, embedder %s",
        len(chunks), dimension, gateway.embedder_id,
    )
    return VectorIndex(
        dimension=int(dimension),
        embedder_id=gateway.embedder_id,
        chunks=list(chunks),
        vectors=vectors,
    )


def save_index(index: VectorIndex, path: str | Path) -> None:
    payload_lines = []
    for chunk in index.chunks:
        payload_lines.append(
            json.dumps(chunk.to_payload(), ensure_ascii=False, sort_keys=True)
        )
    payload = ("\n".join(payload_lines) + "\n").encode("utf-8") if payload_lines else b""
    embedder = index.embedder_id.encode("utf-8")
    vector_block = index.vectors.astype("<f4", copy=False).tobytes()

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(index.format_version, index.dimension, len(index.chunks)))
        fh.write(_U32.pack(len(embedder)))
        fh.write(embedder)
        fh.write(_U64.pack(len(payload)))
        fh.write(payload)
        fh.write(vector_block)


def load_index(path: str | Path) -> VectorIndex:
    """Load an index file; the round-trip with save_index is bit-exact."""
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise IndexFormatError(f"{path}: not an irag index file (bad magic)")
    cursor = len(MAGIC)

    header = _take(data, cursor, _HEADER.size, "header")
    cursor += _HEADER.size
    version, dimension, count = _HEADER.unpack(header)
    if version != FORMAT_VERSION:
        raise IndexVersionError(found=version, supported=FORMAT_VERSION)
    if dimension == 0:
        raise IndexIntegrityError("dimension must be positive", section="header")

    (embedder_len,) = _U32.unpack(_take(data, cursor, _U32.size, "header"))
    cursor += _U32.size
    try:
        embedder_id = _take(data, cursor, embedder_len, "header").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IndexIntegrityError(f"embedder_id is not UTF-8: {exc}", section="header") from exc
    cursor += embedder_len

    (payload_len,) = _U64.unpack(_take(data, cursor, _U64.size, "header"))
    cursor += _U64.size
    payload = _take(data, cursor, payload_len, "chunk payload")
    cursor += payload_len

    chunks = _parse_payload(payload, count)

    vector_bytes = count * dimension * 4
    block = _take(data, cursor, vector_bytes, "vector block")
    cursor += vector_bytes
    if cursor != len(data):
        raise IndexIntegrityError(
            f"{len(data) - cursor} unexpected trailing bytes", section="vector block"
        )
    vectors = np.frombuffer(block, dtype="<f4").reshape(count, dimension)

    index = VectorIndex(
        dimension=dimension,
        embedder_id=embedder_id,
        chunks=chunks,
        vectors=vectors.copy(),
        format_version=version,
        source_checksum=hashlib.sha256(data).hexdigest(),
    )
    return index


def _take(data: bytes, cursor: int, size: int, section: str) -> bytes:
    if cursor + size > len(data):
        raise IndexIntegrityError(
            f"file truncated: wanted {size} bytes at offset {cursor}, "
            f"have {len(data) - cursor}",
            section=section,
        )
    return data[cursor : cursor + size]


def _parse_payload(payload: bytes, count: int) -> list[Chunk]:
    try:
        lines = payload.decode("utf-8").splitlines() if payload else []
    except UnicodeDecodeError as exc:
        raise IndexIntegrityError(
            f"chunk payload is not UTF-8: {exc}", section="chunk payload"
        ) from exc
    if len(lines) != count:
        raise IndexIntegrityError(
            f"chunk payload carries {len(lines)} entries, header says {count}",
            section="chunk payload",
        )
    chunks = []
    for lineno, line in enumerate(lines):
        try:
            chunks.append(Chunk.from_payload(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise IndexIntegrityError(
                f"chunk payload entry {lineno} is corrupt: {exc}", section="chunk payload"
            ) from exc
    return chunks
