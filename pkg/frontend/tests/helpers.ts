import type { ChunkPayload, EvidenceItem, ExplanationResult } from "../src/types";

export function evidence(id: string, relevance: number): EvidenceItem {
  const issueId = Number(id.split("-")[1]?.split("#")[0] ?? 0);
  return {
    chunk_id: id,
    issue_id: issueId,
    source_url: `https://tracker.example/issues/${issueId}`,
    excerpt: `excerpt of ${id}`,
    relevance,
  };
}

export function result(overrides: Partial<ExplanationResult> = {}): ExplanationResult {
  return {
    query: "what is the upload limit?",
    explanation: "The limit is 50 MB by default.",
    evidence: [evidence("issue-101#0", 0.9), evidence("issue-102#0", 0.6)],
    context_found: true,
    model: "mock-chat-1",
    generated_at: "2000-01-01T00:00:00+00:00",
    ...overrides,
  };
}

export function chunkPayload(id: string): ChunkPayload {
  const issueId = Number(id.split("-")[1]?.split("#")[0] ?? 0);
  return {
    chunk_id: id,
    doc_id: `issue-${issueId}`,
    text: `[TITLE] Full text of ${id}\n[BODY] Long body, beyond the excerpt.`,
    char_start: 0,
    char_end: 64,
    metadata: { issue_id: issueId, source_url: `https://tracker.example/issues/${issueId}` },
  };
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function errorResponse(status: number, code: string, message = "nope"): Response {
  return jsonResponse({ error: { code, message } }, status);
}
