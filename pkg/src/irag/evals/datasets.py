"""QA dataset loading and the randomized-robustness construction."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path

from irag.errors import DatasetError

DATASET_TAGS = ("system_qa", "out_of_domain", "robustness")


@dataclass
class QAPair:
    qa_id: str
    question: str
    reference_answer: str
    dataset_tag: str


def load_dataset(path: str | Path) -> list[QAPair]:
    """Load a JSON-lines QA dataset, validating every line.

    Fields per line: qa_id, question, reference_answer, dataset_tag. An empty
    file yields an empty (flagged downstream) list; any schema violation or
    duplicate qa_id is an error naming the line.
    """
    pairs: list[QAPair] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(row, dict):
                raise DatasetError("line is not a JSON object", line=lineno)
            for field_name in ("qa_id", "question", "reference_answer", "dataset_tag"):
                if not isinstance(row.get(field_name), str) or not row[field_name]:
                    raise DatasetError(
                        f"missing or empty field {field_name!r}", line=lineno
                    )
            if row["dataset_tag"] not in DATASET_TAGS:
                raise DatasetError(
                    f"unknown dataset_tag {row['dataset_tag']!r}", line=lineno
                )
            if row["qa_id"] in seen:
                raise DatasetError(f"duplicate qa_id {row['qa_id']!r}", line=lineno)
            seen.add(row["qa_id"])
            pairs.append(
                QAPair(
                    qa_id=row["qa_id"],
                    question=row["question"],
                    reference_answer=row["reference_answer"],
                    dataset_tag=row["dataset_tag"],
                )
            )
    return pairs


def save_dataset(pairs: list[QAPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {
                        "qa_id": pair.qa_id,
                        "question": pair.question,
                        "reference_answer": pair.reference_answer,
                        "dataset_tag": pair.dataset_tag,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")


def derange(pairs: list[QAPair], seed: int) -> list[QAPair]:
    """Mismatch every reference answer via a uniform random derangement.

    Rejection-samples seeded shuffles until none of the positions keeps its
    original reference, which is uniform over derangements. Questions and
    qa_ids stay put; the output is tagged as the robustness dataset.
    """
    n = len(pairs)
    if n < 2:
        raise DatasetError(f"cannot derange {n} pairs: no derangement exists")
    rng = random.Random(seed)
    positions = list(range(n))
    while True:
        perm = positions[:]
        rng.shuffle(perm)
        if all(perm[i] != i for i in positions):
            break
    return [
        replace(
            pair,
            reference_answer=pairs[perm[i]].reference_answer,
            dataset_tag="robustness",
        )
        for i, pair in enumerate(pairs)
    ]
