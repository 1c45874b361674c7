"""irag: grounded question answering over issue-tracker exports.

Pipeline: ingest issue exports into normalized documents, chunk and embed
them into a persistent exact-search vector index, retrieve evidence with
query rewriting + deduplication + reranking, and generate structured JSON
explanations constrained to the retrieved content. Ships an LLM-as-judge
evaluation harness with in-domain, out-of-domain, and randomized-robustness
dataset constructions.
"""

__version__ = "0.1.0"
