/**
 * Typed client for the five annotation-service endpoints.
 *
 * The distinction between ApiError and NetworkError matters to callers:
 * a NetworkError means the request may never have reached the service,
 * so the label loop retries the same item; an ApiError carries a status
 * the service deliberately sent back (bad token, unknown candidate).
 */

import type {
  AgreementResponse,
  ExportResponse,
  LabelAck,
  NextResponse,
  ProgressResponse,
  WireLabel,
} from "./types.js";

export interface ClientConfig {
  /** Base URL of the service, e.g. http://127.0.0.1:8000 */
  serviceUrl: string;
  /** Annotator token; doubles as the annotator id on every request. */
  annotator: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  private readonly base: string;
  private readonly annotator: string;
  private readonly fetchImpl: FetchLike;

  constructor(config: ClientConfig, fetchImpl: FetchLike = fetch) {
    this.base = config.serviceUrl.replace(/\/+$/, "");
    this.annotator = config.annotator;
    this.fetchImpl = fetchImpl;
  }

  get annotatorId(): string {
    return this.annotator;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.base}${path}`, {
        ...init,
        headers: {
          Authorization: `Bearer ${this.annotator}`,
          ...(init?.body ? { "Content-Type": "application/json" } : {}),
        },
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  /** Next unlabeled candidate for this annotator, plus how many remain. */
  next(): Promise<NextResponse> {
    return this.request<NextResponse>(
      `/api/next?annotator=${encodeURIComponent(this.annotator)}`,
    );
  }

  /** Submit one label; resolves only once the service has persisted it. */
  submitLabel(candidateId: string, label: WireLabel): Promise<LabelAck> {
    return this.request<LabelAck>("/api/label", {
      method: "POST",
      body: JSON.stringify({
        candidate_id: candidateId,
        annotator_id: this.annotator,
        label,
      }),
    });
  }

  progress(): Promise<ProgressResponse> {
    return this.request<ProgressResponse>("/api/progress");
  }

  agreement(): Promise<AgreementResponse> {
    return this.request<AgreementResponse>("/api/agreement");
  }

  exportCorpus(): Promise<ExportResponse> {
    return this.request<ExportResponse>("/api/export");
  }
}
