import { ApiClient, ApiError } from "./api";
import {
  renderChunkUnavailable,
  renderChunkView,
  renderErrorCard,
  renderHealthLine,
  renderResultCard,
} from "./render";
import { QuerySession } from "./session";
import type { EvidenceItem } from "./types";

/**
 * The query console: a form on top, newest results first underneath.
 * One in-flight query at a time; errors surface as inline cards with a
 * retry button, so no submission is ever silently dropped.
 */
export class App {
  readonly session: QuerySession;
  private readonly form: HTMLFormElement;
  private readonly input: HTMLInputElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly cancelButton: HTMLButtonElement;
  private readonly results: HTMLElement;
  private readonly status: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    session?: QuerySession,
  ) {
    this.session = session ?? new QuerySession();

    this.form = document.createElement("form");
    this.form.className = "query-form";
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Ask about the system's behavior…";
    this.input.className = "query-input";
    this.submitButton = document.createElement("button");
    this.submitButton.type = "submit";
    this.submitButton.textContent = "Explain";
    this.submitButton.className = "query-submit";
    this.cancelButton = document.createElement("button");
    this.cancelButton.type = "button";
    this.cancelButton.textContent = "Cancel";
    this.cancelButton.className = "query-cancel";
    this.cancelButton.hidden = true;

    this.results = document.createElement("main");
    this.results.className = "results";
    this.status = document.createElement("header");
    this.status.className = "status";

    this.form.append(this.input, this.submitButton, this.cancelButton);
    this.root.append(this.status, this.form, this.results);

    this.input.addEventListener("input", () => this.syncControls());
    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(this.input.value.trim());
    });
    this.cancelButton.addEventListener("click", () => {
      this.session.cancel();
      this.syncControls();
    });
    this.syncControls();
  }

  async refreshHealth(): Promise<void> {
    this.status.replaceChildren();
    try {
      const health = await this.client.health();
      const corpus = health.index
        ? `${health.index.documents} issues · ${health.index.chunks} chunks`
        : "no index loaded";
      const gateway = health.gateway.reachable ? "model server up" : "model server down";
      this.status.appendChild(renderHealthLine(`${health.status} · ${corpus} · ${gateway}`));
    } catch {
      this.status.appendChild(renderHealthLine("service unreachable"));
    }
  }

  /** Submit a query; empty input and double-submission are guarded. */
  async submit(query: string): Promise<void> {
    if (!query || this.session.isPending) {
      return;
    }
    const signal = this.session.begin(query);
    this.syncControls();
    try {
      const result = await this.client.explain(query, signal);
      this.session.complete(result);
      this.results.prepend(
        renderResultCard(result, (item, host) => void this.expandEvidence(item, host)),
      );
      this.input.value = "";
    } catch (error) {
      this.session.fail();
      if (error instanceof DOMException && error.name === "AbortError") {
        return; // explicit cancel: nothing to render
      }
      const message =
        error instanceof ApiError
          ? `The service could not answer (${error.code}, HTTP ${error.status}).`
          : "The service could not be reached.";
      this.results.prepend(renderErrorCard(message, () => void this.submit(query)));
    } finally {
      this.syncControls();
    }
  }

  /** Replace an evidence card's excerpt with the full chunk (or an
   *  unavailable notice when the service no longer knows the id). */
  async expandEvidence(item: EvidenceItem, host: HTMLElement): Promise<void> {
    try {
      const chunk = await this.client.chunk(item.chunk_id);
      host.appendChild(renderChunkView(chunk, item.relevance));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        host.appendChild(renderChunkUnavailable(item.chunk_id));
      } else {
        host.appendChild(
          renderErrorCard("Could not load the chunk.", () => void this.expandEvidence(item, host)),
        );
      }
    }
  }

  private syncControls(): void {
    const pending = this.session.isPending;
    this.submitButton.disabled = pending || this.input.value.trim() === "";
    this.cancelButton.hidden = !pending;
    this.input.readOnly = pending;
  }
}
