/** Shapes mirrored from the service's published schemas. The UI renders only
 *  these fields and never synthesizes content of its own. */

export interface EvidenceItem {
  chunk_id: string;
  issue_id: number;
  source_url: string;
  excerpt: string;
  relevance: number; // 0..1
}

export interface ExplanationResult {
  query: string;
  explanation: string;
  evidence: EvidenceItem[];
  context_found: boolean;
  model: string;
  generated_at: string;
}

export interface ChunkPayload {
  chunk_id: string;
  doc_id: string;
  text: string;
  char_start: number;
  char_end: number;
  metadata: {
    issue_id?: number;
    source_url?: string;
    labels?: string[];
    closed_at?: string | null;
  };
}

export interface HealthSnapshot {
  status: string;
  index: {
    checksum: string | null;
    chunks: number;
    documents: number;
    dimension: number;
    embedder_id: string;
  } | null;
  gateway: { reachable: boolean; chat_model: string };
}
