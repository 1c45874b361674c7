from __future__ import annotations

import numpy as np
import pytest

from irag.chunking import Chunk
from irag.errors import (
    DimensionMismatchError,
    EmptyCorpusError,
    GatewayError,
    IndexFormatError,
    IndexIntegrityError,
    IndexVersionError,
)
from irag.gateway import MockGateway
from irag.index import (
    FORMAT_VERSION,
    VectorIndex,
    available_backends,
    build_index,
    load_index,
    save_index,
    search,
)
from irag.index.store import MAGIC

BACKENDS = available_backends()


def make_chunk(i: int, text: str | None = None, doc: str = "issue-1") -> Chunk:
    body = text if text is not None else f"chunk text {i}"
    return Chunk(
        chunk_id=f"{doc}#{i}",
        doc_id=doc,
        text=body,
        char_start=0,
        char_end=len(body),
        metadata={"issue_id": 1, "source_url": "https://tracker.example/1"},
    )


def make_index(vectors: np.ndarray, ids: list[str] | None = None) -> VectorIndex:
    vectors = np.asarray(vectors, dtype=np.float32)
    chunks = []
    for i in range(vectors.shape[0]):
        chunk = make_chunk(i)
        if ids is not None:
            chunk.chunk_id = ids[i]
        chunks.append(chunk)
    return VectorIndex(
        dimension=vectors.shape[1],
        embedder_id="test-embedder",
        chunks=chunks,
        vectors=vectors,
    )


def brute_force_order(vectors: np.ndarray, ids: list[str], query: np.ndarray) -> list[str]:
    """Exhaustive oracle: score every entry in float64, sort, break ties by id."""
    scores = [
        float(np.dot(row.astype(np.float64), query.astype(np.float64)))
        for row in vectors
    ]
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order]


# ---------------------------------------------------------------------------
# build_index
# ---------------------------------------------------------------------------


def test_build_single_chunk(mock_gateway):
    index = build_index([make_chunk(0)], mock_gateway)
    assert len(index) == 1
    assert index.dimension == 16
    assert index.embedder_id == mock_gateway.embedder_id


def test_build_empty_corpus_rejected(mock_gateway):
    with pytest.raises(EmptyCorpusError, match="empty corpus"):
        build_index([], mock_gateway)


def test_build_100_chunks_deterministic_across_runs():
    chunks = [make_chunk(i) for i in range(100)]
    first = build_index(chunks, MockGateway(seed=9, dim=16), batch_size=7)
    second = build_index(chunks, MockGateway(seed=9, dim=16), batch_size=7)
    assert first.vectors.shape == (100, 16)
    assert (first.vectors == second.vectors).all()  # bit-identical
    assert [c.chunk_id for c in first.chunks] == [c.chunk_id for c in second.chunks]


def test_build_rejects_dimension_drift_across_batches():
    class DriftingGateway:
        embedder_id = "drift"

        def __init__(self):
            self.calls = 0

        def embed(self, texts):
            self.calls += 1
            dim = 4 if self.calls == 1 else 5
            return np.ones((len(texts), dim), dtype=np.float32)

    with pytest.raises(DimensionMismatchError):
        build_index([make_chunk(i) for i in range(4)], DriftingGateway(), batch_size=2)


def test_build_reports_partial_progress_on_gateway_failure():
    class FlakyGateway:
        embedder_id = "flaky"

        def __init__(self):
            self.calls = 0

        def embed(self, texts):
            self.calls += 1
            if self.calls == 3:
                raise GatewayError("server went away")
            return np.ones((len(texts), 4), dtype=np.float32)

    with pytest.raises(GatewayError, match=r"aborted after embedding 4/6"):
        build_index([make_chunk(i) for i in range(6)], FlakyGateway(), batch_size=2)


def test_build_rejects_duplicate_chunk_ids(mock_gateway):
    with pytest.raises(IndexIntegrityError, match="duplicate chunk_id"):
        build_index([make_chunk(1), make_chunk(1)], mock_gateway)


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("backend", BACKENDS)
def test_search_self_match_on_basis_vectors(backend):
    index = make_index(np.eye(2, dtype=np.float32))
    hits = search(index, np.array([1.0, 0.0]), k=1, backend=backend)
    assert len(hits) == 1
    assert hits[0].chunk_id == "issue-1#0"
    assert hits[0].score == pytest.approx(1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_search_k_larger_than_corpus(backend):
    index = make_index(np.eye(3, dtype=np.float32))
    hits = search(index, np.array([1.0, 0.0, 0.0]), k=10, backend=backend)
    assert len(hits) == 3


@pytest.mark.parametrize("backend", BACKENDS)
def test_search_matches_brute_force_oracle_seeded(backend):
    rng = np.random.default_rng(42)
    vectors = rng.normal(size=(20, 8)).astype(np.float32)
    index = make_index(vectors)
    query = np.random.default_rng(7).normal(size=8)
    hits = search(index, query, k=3, backend=backend)
    oracle = brute_force_order(vectors, [c.chunk_id for c in index.chunks], query)
    assert [h.chunk_id for h in hits] == oracle[:3]


@pytest.mark.parametrize("backend", BACKENDS)
def test_search_total_order_equals_exhaustive_scoring(backend):
    rng = np.random.default_rng(3)
    vectors = rng.normal(size=(17, 6)).astype(np.float32)
    # Duplicate rows force exact score ties; ids then decide the order.
    vectors[5] = vectors[11]
    vectors[2] = vectors[14]
    index = make_index(vectors)
    query = rng.normal(size=6)
    hits = search(index, query, k=len(index), backend=backend)
    oracle = brute_force_order(vectors, [c.chunk_id for c in index.chunks], query)
    assert [h.chunk_id for h in hits] == oracle
    scores = [h.score for h in hits]
    assert scores == sorted(scores, reverse=True)


@pytest.mark.parametrize("backend", BACKENDS)
def test_search_tie_break_is_lexicographic_on_chunk_id(backend):
    # Same vector everywhere: scores all equal, ids decide. Note that
    # lexicographic order differs from numeric suffix order here.
    ids = ["issue-2#0", "issue-10#0", "issue-1#1", "issue-1#0"]
    vectors = np.ones((4, 3), dtype=np.float32)
    index = make_index(vectors, ids=ids)
    hits = search(index, np.ones(3), k=4, backend=backend)
    assert [h.chunk_id for h in hits] == sorted(ids)


def test_search_dimension_mismatch():
    index = make_index(np.eye(3, dtype=np.float32))
    with pytest.raises(DimensionMismatchError):
        search(index, np.ones(4), k=1)


def test_search_rejects_bad_k():
    index = make_index(np.eye(2, dtype=np.float32))
    with pytest.raises(ValueError):
        search(index, np.ones(2), k=0)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="native kernel not built")
def test_backends_agree_on_random_corpora():
    rng = np.random.default_rng(123)
    for _ in range(25):
        n = int(rng.integers(1, 40))
        vectors = rng.normal(size=(n, 8)).astype(np.float32)
        index = make_index(vectors)
        query = rng.normal(size=8)
        for k in (1, 5, n):
            native = search(index, query, k=k, backend="native")
            numpy_hits = search(index, query, k=k, backend="numpy")
            assert [h.chunk_id for h in native] == [h.chunk_id for h in numpy_hits]
            assert np.allclose(
                [h.score for h in native], [h.score for h in numpy_hits], rtol=1e-12
            )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def build_fixture_index(n=100, dim=16, seed=5) -> VectorIndex:
    chunks = [make_chunk(i, text=f"payload text {i} with unicode: déjà vu {i}")
              for i in range(n)]
    return build_index(chunks, MockGateway(seed=seed, dim=dim), batch_size=13)


def test_save_load_roundtrip_is_bit_exact(tmp_path):
    index = build_fixture_index()
    path = tmp_path / "fixture.iragidx"
    save_index(index, path)
    loaded = load_index(path)
    assert loaded.dimension == index.dimension
    assert loaded.embedder_id == index.embedder_id
    assert loaded.format_version == FORMAT_VERSION
    assert loaded.chunks == index.chunks
    assert loaded.vectors.tobytes() == index.vectors.tobytes()
    # Saving the loaded index again reproduces the file byte for byte.
    second = tmp_path / "again.iragidx"
    save_index(loaded, second)
    assert second.read_bytes() == path.read_bytes()
    assert loaded.source_checksum is not None


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.iragidx"
    path.write_bytes(b"NOTANIDX" + b"\x00" * 64)
    with pytest.raises(IndexFormatError, match="bad magic"):
        load_index(path)


def test_load_rejects_bumped_format_version(tmp_path):
    index = build_fixture_index(n=3)
    path = tmp_path / "v2.iragidx"
    save_index(index, path)
    data = bytearray(path.read_bytes())
    data[len(MAGIC)] = 2  # format_version u32 LE
    path.write_bytes(bytes(data))
    with pytest.raises(IndexVersionError, match="rebuild"):
        load_index(path)


def test_load_truncated_vector_block_names_section(tmp_path):
    index = build_fixture_index(n=5)
    path = tmp_path / "trunc.iragidx"
    save_index(index, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 10])  # cut into the last vector
    with pytest.raises(IndexIntegrityError) as excinfo:
        load_index(path)
    assert excinfo.value.section == "vector block"


def test_load_corrupt_at_any_offset_is_typed_error_never_crash(tmp_path):
    index = build_fixture_index(n=8)
    path = tmp_path / "fuzz.iragidx"
    save_index(index, path)
    data = path.read_bytes()
    cuts = sorted({1, 7, 8, 12, 20, 30, len(data) // 2, len(data) - 1})
    for cut in cuts:
        mutilated = tmp_path / f"cut{cut}.iragidx"
        mutilated.write_bytes(data[:cut])
        with pytest.raises((IndexFormatError, IndexIntegrityError)):
            load_index(mutilated)


def test_load_trailing_garbage_rejected(tmp_path):
    index = build_fixture_index(n=3)
    path = tmp_path / "extra.iragidx"
    save_index(index, path)
    path.write_bytes(path.read_bytes() + b"extra")
    with pytest.raises(IndexIntegrityError, match="trailing"):
        load_index(path)


def test_load_corrupt_payload_json_names_section(tmp_path):
    index = build_fixture_index(n=3)
    path = tmp_path / "payload.iragidx"
    save_index(index, path)
    data = path.read_bytes()
    # Flip a structural byte inside the first JSON payload line.
    anchor = data.index(b'{"char_end"')
    corrupted = data[:anchor] + b"X" + data[anchor + 1 :]
    path.write_bytes(corrupted)
    with pytest.raises(IndexIntegrityError) as excinfo:
        load_index(path)
    assert excinfo.value.section == "chunk payload"
