import type { ExplanationResult } from "./types";

export interface SessionEntry {
  query: string;
  result: ExplanationResult;
}

/**
 * Client-memory query session: append-only history, at most one in-flight
 * query. A new submission while one is pending is rejected until the pending
 * one finishes or is explicitly cancelled.
 */
export class QuerySession {
  private readonly entries: SessionEntry[] = [];
  private inFlight: { query: string; controller: AbortController } | null = null;

  get history(): readonly SessionEntry[] {
    return this.entries;
  }

  get pendingQuery(): string | null {
    return this.inFlight ? this.inFlight.query : null;
  }

  get isPending(): boolean {
    return this.inFlight !== null;
  }

  begin(query: string): AbortSignal {
    if (this.inFlight) {
      throw new Error(`a query is already pending: ${this.inFlight.query}`);
    }
    this.inFlight = { query, controller: new AbortController() };
    return this.inFlight.controller.signal;
  }

  complete(result: ExplanationResult): SessionEntry {
    if (!this.inFlight) {
      throw new Error("no pending query to complete");
    }
    const entry = { query: this.inFlight.query, result };
    this.entries.push(entry);
    this.inFlight = null;
    return entry;
  }

  fail(): void {
    this.inFlight = null;
  }

  cancel(): void {
    if (this.inFlight) {
      this.inFlight.controller.abort();
      this.inFlight = null;
    }
  }
}
