import type { ChunkPayload, ExplanationResult, HealthSnapshot } from "./types";

/** Error carrying the service's machine-readable code alongside the status. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface RetryOptions {
  retries: number;
  baseDelayMs: number;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Fetch with retry on transient failures: network errors and 5xx responses
 * are retried with exponential backoff; 4xx client errors never are.
 */
export async function fetchWithRetry(
  doFetch: () => Promise<Response>,
  { retries, baseDelayMs }: RetryOptions,
): Promise<Response> {
  let lastError: unknown = null;
  for (let attempt = 0; attempt <= retries; attempt++) {
    if (attempt > 0 && baseDelayMs > 0) {
      await sleep(baseDelayMs * 2 ** (attempt - 1));
    }
    try {
      const response = await doFetch();
      if (response.status >= 500 && attempt < retries) {
        lastError = new ApiError(response.status, "server_error", "transient server error");
        continue;
      }
      return response;
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") {
        throw error; // cancellation is not a transient failure
      }
      lastError = error;
    }
  }
  throw lastError instanceof Error ? lastError : new Error(String(lastError));
}

async function raiseForStatus(response: Response): Promise<Response> {
  if (response.ok) {
    return response;
  }
  let code = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: { code?: string; message?: string } };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the defaults
  }
  throw new ApiError(response.status, code, message);
}

/** Client for the three service endpoints; the only network surface the UI uses. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly retry: RetryOptions = { retries: 2, baseDelayMs: 500 },
  ) {}

  async explain(query: string, signal?: AbortSignal): Promise<ExplanationResult> {
    const response = await fetchWithRetry(
      () =>
        this.fetchFn(`${this.baseUrl}/api/explain`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ query }),
          signal,
        }),
      this.retry,
    );
    await raiseForStatus(response);
    return (await response.json()) as ExplanationResult;
  }

  async chunk(chunkId: string, signal?: AbortSignal): Promise<ChunkPayload> {
    // chunk ids contain '#': must be percent-encoded in the path.
    const response = await fetchWithRetry(
      () =>
        this.fetchFn(`${this.baseUrl}/api/chunks/${encodeURIComponent(chunkId)}`, { signal }),
      this.retry,
    );
    await raiseForStatus(response);
    return (await response.json()) as ChunkPayload;
  }

  async health(): Promise<HealthSnapshot> {
    const response = await fetchWithRetry(
      () => this.fetchFn(`${this.baseUrl}/api/health`, {}),
      this.retry,
    );
    await raiseForStatus(response);
    return (await response.json()) as HealthSnapshot;
  }
}
