import type { ChunkPayload, EvidenceItem, ExplanationResult } from "./types";

/** DOM builders. Pure functions of the response data: the UI shows exactly
 *  what the service returned, in the order it returned it. */

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderResultCard(
  result: ExplanationResult,
  onExpandEvidence: (item: EvidenceItem, host: HTMLElement) => void,
): HTMLElement {
  const card = el("article", "result-card");
  card.appendChild(el("h3", "result-query", result.query));

  if (!result.context_found) {
    const banner = el(
      "div",
      "abstention-banner",
      "No supporting evidence was found in the issue corpus for this query.",
    );
    banner.setAttribute("role", "status");
    card.appendChild(banner);
  }

  card.appendChild(el("p", "result-explanation", result.explanation));
  card.appendChild(renderEvidencePanel(result.evidence, onExpandEvidence));

  const meta = el("footer", "result-meta",
                  `${result.model} · ${result.generated_at}`);
  card.appendChild(meta);
  return card;
}

export function renderEvidencePanel(
  evidence: EvidenceItem[],
  onExpand: (item: EvidenceItem, host: HTMLElement) => void,
): HTMLElement {
  const panel = el("section", "evidence-panel");
  panel.appendChild(el("h4", undefined, `Evidence (${evidence.length})`));
  const list = el("ol", "evidence-list");
  for (const item of evidence) {
    list.appendChild(renderEvidenceCard(item, onExpand));
  }
  panel.appendChild(list);
  return panel;
}

function renderEvidenceCard(
  item: EvidenceItem,
  onExpand: (item: EvidenceItem, host: HTMLElement) => void,
): HTMLElement {
  const card = el("li", "evidence-card");
  card.dataset.chunkId = item.chunk_id;

  const header = el("div", "evidence-header");
  header.appendChild(el("span", "evidence-chunk-id", item.chunk_id));
  header.appendChild(el("span", "evidence-issue", `issue ${item.issue_id}`));
  header.appendChild(renderRelevanceBar(item.relevance));
  card.appendChild(header);

  card.appendChild(el("p", "evidence-excerpt", item.excerpt));

  const expand = el("button", "evidence-expand", "Show full chunk");
  expand.type = "button";
  expand.addEventListener("click", () => onExpand(item, card));
  card.appendChild(expand);
  return card;
}

export function renderRelevanceBar(relevance: number): HTMLElement {
  const percent = Math.round(Math.min(1, Math.max(0, relevance)) * 100);
  const bar = el("span", "relevance-bar");
  bar.title = `relevance ${relevance}`; // raw value in the tooltip
  const fill = el("span", "relevance-fill");
  fill.style.width = `${percent}%`;
  bar.appendChild(fill);
  bar.appendChild(el("span", "relevance-percent", `${percent}%`));
  return bar;
}

export function renderChunkView(chunk: ChunkPayload, relevance?: number): HTMLElement {
  const view = el("div", "chunk-view");
  view.appendChild(el("h5", undefined, chunk.chunk_id));
  if (relevance !== undefined) {
    view.appendChild(renderRelevanceBar(relevance));
  }
  view.appendChild(el("pre", "chunk-text", chunk.text));
  const sourceUrl = chunk.metadata.source_url;
  if (sourceUrl) {
    const link = el("a", "chunk-source-link", "Open issue");
    link.href = sourceUrl; // verbatim from the service
    link.target = "_blank";
    link.rel = "noreferrer";
    view.appendChild(link);
  }
  return view;
}

export function renderChunkUnavailable(chunkId: string): HTMLElement {
  return el("div", "chunk-unavailable", `Chunk ${chunkId} is unavailable.`);
}

export function renderErrorCard(message: string, onRetry: () => void): HTMLElement {
  const card = el("div", "error-card");
  card.setAttribute("role", "alert");
  card.appendChild(el("p", "error-message", message));
  const retry = el("button", "error-retry", "Retry");
  retry.type = "button";
  retry.addEventListener("click", onRetry);
  card.appendChild(retry);
  return card;
}

export function renderHealthLine(text: string): HTMLElement {
  return el("div", "health-line", text);
}
