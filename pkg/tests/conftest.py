from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from irag.chunking import chunk_document
from irag.gateway import MockGateway
from irag.index import build_index
from irag.ingest import ingest_export

REPO_ROOT = Path(__file__).resolve().parent.parent
DATASETS_DIR = REPO_ROOT / "datasets"
FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"
PLAYBOOKS_DIR = FIXTURES_DIR / "playbooks"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

DEMO_ISSUES_CSV = DATASETS_DIR / "demo_issues.csv"
SYSTEM_QA = DATASETS_DIR / "system_qa.jsonl"
OUT_OF_DOMAIN = DATASETS_DIR / "out_of_domain.jsonl"


@pytest.fixture(scope="session")
def demo_documents():
    documents, _parsed = ingest_export(DEMO_ISSUES_CSV.read_bytes(), "csv")
    return documents


@pytest.fixture(scope="session")
def demo_chunks(demo_documents):
    chunks = []
    for doc in demo_documents:
        chunks.extend(chunk_document(doc, chunk_size=400, overlap=80))
    return chunks


@pytest.fixture(scope="session")
def demo_index(demo_chunks):
    return build_index(demo_chunks, MockGateway(seed=1, dim=16))


@pytest.fixture
def mock_gateway():
    return MockGateway(seed=1, dim=16)


def make_csv(rows: list[dict], header: list[str] | None = None) -> bytes:
    """Render export rows as CSV bytes (RFC-4180 via csv module)."""
    header = header or [
        "issue_id", "title", "body", "comments", "state",
        "created_at", "closed_at", "labels", "source_url",
    ]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    outcomes = {}
    for status in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call" and status != "skipped":
                continue
            name = report.nodeid.rsplit("::", 1)[-1]
            if name.startswith("test_criterion_"):
                number = int(name.split("_")[2])
                outcomes[number] = status.upper()
    if not outcomes:
        return
    from tests.test_acceptance import CRITERIA

    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(outcomes):
        label = {"PASSED": "PASS", "FAILED": "FAIL", "SKIPPED": "SKIP"}[outcomes[number]]
        terminalreporter.write_line(
            f"ACCEPTANCE {number:>2} {label}  {CRITERIA[number]}"
        )


def make_row(issue_id, title="A reasonably descriptive issue title", state="closed",
             body="The behavior is wrong in a way that is long enough to keep.",
             comments=(), created="2024-01-01T00:00:00Z",
             closed="2024-01-02T00:00:00Z", labels=(), url="") -> dict:
    return {
        "issue_id": issue_id,
        "title": title,
        "body": body,
        "comments": json.dumps(list(comments)),
        "state": state,
        "created_at": created,
        "closed_at": closed if state == "closed" else "",
        "labels": json.dumps(list(labels)),
        "source_url": url or f"https://tracker.example/issues/{issue_id}",
    }
