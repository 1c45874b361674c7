"""Issue-tracker export ingestion.

Turns raw CSV / JSON-lines exports into normalized issue records and
generation-ready documents. The stages are pure and composable:

    parse_issue_export -> normalize_records -> filter_issues -> to_documents

Export columns / fields: issue_id, title, body, comments, state, created_at,
closed_at, labels, source_url. In CSV the comments (and labels) cells hold a
JSON array string, so one issue stays one row. Timestamps are ISO-8601 UTC.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from irag.errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

URL_PLACEHOLDER = "<URL>"

# Deliberately simple URL shape: scheme up to the next whitespace.
_URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)
_HSPACE_RE = re.compile(r"[ \t\f\v]+")
_EDGE_SPACE_RE = re.compile(r" ?\n ?")
_BLANK_RUN_RE = re.compile(r"\n{3,}")


@dataclass
class IssueRecord:
    """One issue as exported from the tracker."""

    issue_id: int
    title: str
    body: str
    comments: list[str]
    state: str  # "open" | "closed"
    created_at: datetime
    closed_at: datetime | None
    labels: list[str]
    source_url: str


@dataclass
class Document:
    """A generation-ready document derived from one issue.

    ``doc_id`` is bijective with the issue id (``issue-<issue_id>``); the text
    concatenates the issue sections under ``[TITLE]`` / ``[BODY]`` /
    ``[COMMENT k]`` markers so chunk provenance survives chunking.
    """

    doc_id: str
    text: str
    metadata: dict


@dataclass
class ParseResult:
    """Records recovered from an export plus the count of skipped rows."""

    records: list[IssueRecord]
    skipped: int


@dataclass
class FilterPolicy:
    """Which records survive :func:`filter_issues`.

    ``min_chars`` applies to the normalized title+body+comments character
    total; entries below it are considered uninformative.
    """

    closed_only: bool = True
    drop_duplicates: bool = True
    min_chars: int = 40


def normalize_text(raw: str) -> str:
    """Scrub URLs and whitespace from free text.

    Every maximal ``http(s)://...`` run becomes the literal ``<URL>`` token;
    tabs and space runs collapse to one space; three or more newlines collapse
    to a paragraph break; horizontal whitespace touching a newline is dropped;
    the ends are trimmed. Idempotent and total.
    """
    text = _URL_RE.sub(URL_PLACEHOLDER, raw)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = _HSPACE_RE.sub(" ", text)
    text = _EDGE_SPACE_RE.sub("\n", text)
    text = _BLANK_RUN_RE.sub("\n\n", text)
    return text.strip()


def normalize_record(record: IssueRecord) -> IssueRecord:
    """Return a copy of ``record`` with all text fields normalized."""
    return replace(
        record,
        title=normalize_text(record.title),
        body=normalize_text(record.body),
        comments=[normalize_text(c) for c in record.comments],
        labels=[label.strip() for label in record.labels],
    )


def normalize_records(records: Iterable[IssueRecord]) -> list[IssueRecord]:
    return [normalize_record(r) for r in records]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_EXPORT_FIELDS = (
    "issue_id",
    "title",
    "body",
    "comments",
    "state",
    "created_at",
    "closed_at",
    "labels",
    "source_url",
)


def parse_issue_export(raw: bytes, format: str) -> ParseResult:
    """Decode an export stream into issue records.

    Rows missing an issue_id or title (or otherwise unusable: bad state, bad
    timestamps, duplicate-malformed cells) are skipped and counted, never
    fatal. An undecodable stream or unknown format tag is fatal.

    Normalization is NOT applied here; see :func:`normalize_records`.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("export is not valid UTF-8", byte_offset=exc.start) from exc

    if format == "csv":
        return _parse_csv(text)
    if format == "json_lines":
        return _parse_json_lines(text)
    raise ConfigError(f"unknown export format {format!r} (expected csv or json_lines)")


def _parse_csv(text: str) -> ParseResult:
    reader = csv.DictReader(io.StringIO(text))
    records: list[IssueRecord] = []
    skipped = 0
    for row in reader:
        record = _row_to_record(row or {})
        if record is None:
            skipped += 1
        else:
            records.append(record)
    return ParseResult(records, skipped)


def _parse_json_lines(text: str) -> ParseResult:
    records: list[IssueRecord] = []
    skipped = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            skipped += 1
            continue
        if not isinstance(row, dict):
            skipped += 1
            continue
        record = _row_to_record(row)
        if record is None:
            skipped += 1
        else:
            records.append(record)
    return ParseResult(records, skipped)


def _row_to_record(row: dict) -> IssueRecord | None:
    """Map one export row to a record, or None if the row is malformed."""
    try:
        issue_id = int(str(row.get("issue_id", "")).strip())
    except (TypeError, ValueError):
        return None
    title = str(row.get("title") or "").strip()
    if not title:
        return None

    state = str(row.get("state") or "").strip().lower()
    if state not in ("open", "closed"):
        return None

    created_at = _parse_timestamp(row.get("created_at"))
    if created_at is None:
        return None
    closed_at = _parse_timestamp(row.get("closed_at"))
    if state == "closed" and (closed_at is None or closed_at < created_at):
        return None

    return IssueRecord(
        issue_id=issue_id,
        title=title,
        body=str(row.get("body") or ""),
        comments=_parse_string_list(row.get("comments")),
        state=state,
        created_at=created_at,
        closed_at=closed_at,
        labels=_parse_string_list(row.get("labels")),
        source_url=str(row.get("source_url") or ""),
    )


def _parse_timestamp(value) -> datetime | None:
    if value is None:
        return None
    text = str(value).strip()
    if not text:
        return None
    try:
        parsed = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        return None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _parse_string_list(value) -> list[str]:
    """Accept a JSON array (list or JSON-array string) or a comma list."""
    if value is None:
        return []
    if isinstance(value, list):
        return [str(item) for item in value]
    text = str(value).strip()
    if not text:
        return []
    if text.startswith("["):
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError:
            parsed = None
        if isinstance(parsed, list):
            return [str(item) for item in parsed]
    return [part.strip() for part in text.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# Filtering and document assembly
# ---------------------------------------------------------------------------


def filter_issues(
    records: list[IssueRecord], policy: FilterPolicy | None = None
) -> list[IssueRecord]:
    """Apply the corpus policy: closed-only, dedupe by id, drop near-empty.

    Input order is preserved; on duplicate issue_ids the first occurrence
    wins. Length is measured on normalized text so the floor is stable no
    matter whether normalization ran upstream.
    """
    policy = policy or FilterPolicy()
    seen: set[int] = set()
    kept: list[IssueRecord] = []
    for record in records:
        if policy.closed_only and record.state != "closed":
            continue
        if policy.drop_duplicates:
            if record.issue_id in seen:
                continue
            seen.add(record.issue_id)
        if _normalized_length(record) < policy.min_chars:
            continue
        kept.append(record)
    return kept


def _normalized_length(record: IssueRecord) -> int:
    total = len(normalize_text(record.title)) + len(normalize_text(record.body))
    return total + sum(len(normalize_text(c)) for c in record.comments)


def to_documents(records: list[IssueRecord]) -> list[Document]:
    """Assemble one document per record (records must be normalized/filtered).

    Section order is TITLE, BODY, COMMENT 1..n, each on its own line. An empty
    body keeps its marker so the layout stays positionally stable.
    """
    documents = []
    for record in records:
        sections = [f"[TITLE] {record.title}"]
        sections.append(f"[BODY] {record.body}" if record.body else "[BODY]")
        for k, comment in enumerate(record.comments, start=1):
            sections.append(f"[COMMENT {k}] {comment}")
        documents.append(
            Document(
                doc_id=f"issue-{record.issue_id}",
                text="\n".join(sections),
                metadata={
                    "issue_id": record.issue_id,
                    "source_url": record.source_url,
                    "closed_at": record.closed_at.isoformat() if record.closed_at else None,
                    "labels": list(record.labels),
                },
            )
        )
    return documents


def write_corpus(documents: list[Document], path: str | Path) -> None:
    """Write documents as JSON lines (one document per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(
                json.dumps(
                    {"doc_id": doc.doc_id, "text": doc.text, "metadata": doc.metadata},
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")


def read_corpus(path: str | Path) -> list[Document]:
    documents = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"corpus line {lineno} is not valid JSON") from exc
            try:
                documents.append(
                    Document(
                        doc_id=payload["doc_id"],
                        text=payload["text"],
                        metadata=payload.get("metadata", {}),
                    )
                )
            except KeyError as exc:
                raise ParseError(f"corpus line {lineno} is missing field {exc}") from exc
    return documents


def ingest_export(
    raw: bytes, format: str, policy: FilterPolicy | None = None
) -> tuple[list[Document], ParseResult]:
    """Full ingest pipeline: parse, normalize, filter, assemble documents."""
    parsed = parse_issue_export(raw, format)
    normalized = normalize_records(parsed.records)
    kept = filter_issues(normalized, policy)
    if parsed.skipped:
        logger.info("ingest: skipped %d malformed rows", parsed.skipped)
    logger.info("ingest: %d records parsed, %d kept", len(parsed.records), len(kept))
    return to_documents(kept), parsed
