"""Recursive document chunking with exact source provenance.

Splitting walks a separator hierarchy ("\\n\\n", "\\n", " ", "") from coarse
to fine: a span that fits the size budget is kept whole; an oversized span is
split at the coarsest separator present, recursing into pieces that still do
not fit. Separators stay attached to the preceding piece so that every chunk
is an exact source slice and every character is covered. Adjacent pieces are
then greedily re-merged while they fit, which keeps chunks as full as the
budget allows without crossing the size limit.

Overlap is produced by the character-level fallback: when a span contains no
separator at all, it is cut by a sliding window of ``chunk_size`` advancing
``chunk_size - overlap`` characters, so neighbouring window chunks share
exactly ``overlap`` characters. Chunks cut at semantic separators do not
overlap artificially.
"""
from __future__ import annotations

from dataclasses import dataclass

from irag.errors import ConfigError
from irag.ingest import Document

SEPARATORS = ("\n\n", "\n", " ", "")

DEFAULT_CHUNK_SIZE = 1000
DEFAULT_OVERLAP = 200


@dataclass
class Chunk:
    """A bounded span of one document; the unit of embedding and retrieval.

    Invariant: ``text == source_text[char_start:char_end]`` and
    ``len(text) <= chunk_size``.
    """

    chunk_id: str
    doc_id: str
    text: str
    char_start: int
    char_end: int
    metadata: dict

    def to_payload(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "metadata": self.metadata,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Chunk":
        return cls(
            chunk_id=payload["chunk_id"],
            doc_id=payload["doc_id"],
            text=payload["text"],
            char_start=payload["char_start"],
            char_end=payload["char_end"],
            metadata=payload.get("metadata", {}),
        )


def chunk_document(
    doc: Document,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
) -> list[Chunk]:
    """Split a document into chunks of at most ``chunk_size`` characters.

    Chunk ordinals follow source order; ids are ``<doc_id>#<k>``.
    """
    spans = split_spans(doc.text, chunk_size, overlap)
    return [
        Chunk(
            chunk_id=f"{doc.doc_id}#{k}",
            doc_id=doc.doc_id,
            text=doc.text[start:end],
            char_start=start,
            char_end=end,
            metadata=doc.metadata,
        )
        for k, (start, end) in enumerate(spans)
    ]


def split_spans(text: str, chunk_size: int, overlap: int) -> list[tuple[int, int]]:
    """Compute chunk spans as (char_start, char_end) offset pairs."""
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    if overlap < 0 or overlap >= chunk_size:
        raise ConfigError(
            f"overlap must satisfy 0 <= overlap < chunk_size, got "
            f"overlap={overlap} chunk_size={chunk_size}"
        )
    if not text:
        return []
    pieces = _atomic_spans(text, 0, len(text), 0, chunk_size, overlap)
    return _merge_adjacent(pieces, chunk_size)


def _atomic_spans(
    text: str, start: int, end: int, sep_index: int, chunk_size: int, overlap: int
) -> list[tuple[int, int]]:
    if end - start <= chunk_size:
        return [(start, end)]

    separator = SEPARATORS[sep_index]
    if separator == "":
        return _window_spans(start, end, chunk_size, overlap)

    pieces = _split_at(text, start, end, separator)
    if len(pieces) == 1:
        # Separator absent in this span; try the next finer one.
        return _atomic_spans(text, start, end, sep_index + 1, chunk_size, overlap)

    out: list[tuple[int, int]] = []
    for piece_start, piece_end in pieces:
        if piece_end - piece_start <= chunk_size:
            out.append((piece_start, piece_end))
        else:
            out.extend(
                _atomic_spans(text, piece_start, piece_end, sep_index + 1, chunk_size, overlap)
            )
    return out


def _split_at(text: str, start: int, end: int, separator: str) -> list[tuple[int, int]]:
    """Partition [start, end) at each separator, separator kept on the left."""
    pieces: list[tuple[int, int]] = []
    pos = start
    while pos < end:
        hit = text.find(separator, pos, end)
        if hit == -1:
            pieces.append((pos, end))
            break
        pieces.append((pos, hit + len(separator)))
        pos = hit + len(separator)
    return pieces


def _window_spans(start: int, end: int, chunk_size: int, overlap: int) -> list[tuple[int, int]]:
    """Sliding window over separator-free text; step = chunk_size - overlap."""
    spans = []
    pos = start
    while True:
        window_end = min(pos + chunk_size, end)
        spans.append((pos, window_end))
        if window_end >= end:
            return spans
        pos = window_end - overlap


def _merge_adjacent(
    pieces: list[tuple[int, int]], chunk_size: int
) -> list[tuple[int, int]]:
    """Greedily merge contiguous pieces while the result fits the budget.

    Window pieces from the character fallback overlap their neighbours
    (start < previous end) and are intentionally never merged.
    """
    merged = [pieces[0]]
    for piece_start, piece_end in pieces[1:]:
        cur_start, cur_end = merged[-1]
        if piece_start == cur_end and piece_end - cur_start <= chunk_size:
            merged[-1] = (cur_start, piece_end)
        else:
            merged.append((piece_start, piece_end))
    return merged
