// Thin client for the pipeline HTTP API. Errors carry the server's envelope
// code so screens can react to conflicts (case_closed, duplicate_reviewer).

import type {
  AdjudicationDraft,
  AssessmentDraft,
  QueueResponse,
  ReviewCase,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    asText = false,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token && method !== "GET") {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network_error", String(err), 0);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} for ${path}`;
      try {
        const envelope = await response.json();
        if (envelope?.error?.code) {
          code = envelope.error.code;
          message = envelope.error.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the generic message
      }
      throw new ApiError(code, message, response.status);
    }
    return (asText ? response.text() : response.json()) as Promise<T>;
  }

  queue(status?: string): Promise<QueueResponse> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request("GET", `/api/queue${suffix}`);
  }

  getCase(caseId: string): Promise<ReviewCase> {
    return this.request("GET", `/api/cases/${encodeURIComponent(caseId)}`);
  }

  annotatedHtml(caseId: string): Promise<string> {
    return this.request(
      "GET",
      `/api/cases/${encodeURIComponent(caseId)}/annotated`,
      undefined,
      true,
    );
  }

  submitAssessment(caseId: string, draft: AssessmentDraft): Promise<ReviewCase> {
    return this.request(
      "POST",
      `/api/cases/${encodeURIComponent(caseId)}/assessments`,
      draft,
    );
  }

  submitAdjudication(caseId: string, draft: AdjudicationDraft): Promise<ReviewCase> {
    return this.request(
      "POST",
      `/api/cases/${encodeURIComponent(caseId)}/adjudication`,
      draft,
    );
  }
}
