"""Versioned prompt assets.

Prompt text lives in .txt files next to this module, one file per prompt
revision (suffix ``_v<k>``), never inlined in code. Reports embed the sha256
of each asset so every score stays attributable to an exact prompt revision.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

PROMPT_FILES = {
    "explain_system": "explain_system_v1.txt",
    "explain_user": "explain_user_v1.txt",
    "rewrite": "rewrite_v1.txt",
    "judge_answer_vs_reference": "judge_answer_vs_reference_v1.txt",
    "judge_helpfulness": "judge_helpfulness_v1.txt",
    "judge_faithfulness": "judge_faithfulness_v1.txt",
    "judge_doc_relevance": "judge_doc_relevance_v1.txt",
    "judge_chunk_relevance": "judge_chunk_relevance_v1.txt",
}

NO_CONTEXT_MARKER = "NO CONTEXT AVAILABLE"


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    """Return the prompt text (trailing newline stripped)."""
    filename = PROMPT_FILES[name]
    text = resources.files(__package__).joinpath(filename).read_text(encoding="utf-8")
    return text.rstrip("\n")


@lru_cache(maxsize=None)
def prompt_sha(name: str) -> str:
    return hashlib.sha256(load_prompt(name).encode("utf-8")).hexdigest()


def prompt_manifest() -> dict[str, dict[str, str]]:
    """File and content hash for every prompt asset, for report snapshots."""
    return {
        name: {"file": filename, "sha256": prompt_sha(name)}
        for name, filename in sorted(PROMPT_FILES.items())
    }
