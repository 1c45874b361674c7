"""Benchmark: compiled top-k kernel vs numpy fallback.

Builds a synthetic index and times exact top-k queries through both search
backends; verifies on the way that they return identical rankings.

    python benchmarks/bench_search.py --entries 20000 --dim 384 --k 15
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from irag.chunking import Chunk
from irag.index import VectorIndex, available_backends, search


def synthetic_index(entries: int, dim: int, seed: int) -> VectorIndex:
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(entries, dim)).astype(np.float32)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    chunks = [
        Chunk(chunk_id=f"issue-{i}#0", doc_id=f"issue-{i}", text=f"chunk {i}",
              char_start=0, char_end=7, metadata={})
        for i in range(entries)
    ]
    return VectorIndex(dimension=dim, embedder_id="bench", chunks=chunks,
                       vectors=vectors)


def time_backend(index: VectorIndex, queries: np.ndarray, k: int, backend: str) -> float:
    search(index, queries[0], k, backend=backend)  # warm up (tie ranks, caches)
    started = time.perf_counter()
    for query in queries:
        search(index, query, k, backend=backend)
    return (time.perf_counter() - started) / len(queries)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entries", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=384)
    parser.add_argument("--k", type=int, default=15)
    parser.add_argument("--queries", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"entries={args.entries} dim={args.dim} k={args.k} "
          f"queries={args.queries} backends={backends}")
    index = synthetic_index(args.entries, args.dim, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    queries = rng.normal(size=(args.queries, args.dim))

    for query in queries[:5]:
        rankings = {
            backend: [h.chunk_id for h in search(index, query, args.k, backend=backend)]
            for backend in backends
        }
        assert len(set(map(tuple, rankings.values()))) == 1, "backends disagree"

    results = {b: time_backend(index, queries, args.k, b) for b in backends}
    baseline = results.get("numpy")
    print(f"{'backend':<10} {'per query':>12} {'speedup vs numpy':>18}")
    for backend, seconds in results.items():
        speedup = f"{baseline / seconds:.2f}x" if baseline else "n/a"
        print(f"{backend:<10} {seconds * 1e3:>10.3f}ms {speedup:>18}")


if __name__ == "__main__":
    main()
