// Thin typed client for the annotation service.

import type {
  ApiError,
  CriteriaSchema,
  NextResponse,
  Progress,
  RecordPayload,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class Api {
  constructor(
    private token: string,
    private base: string = "",
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const res = await fetch(this.base + path, {
      ...init,
      headers: {
        "X-Auth-Token": this.token,
        "Content-Type": "application/json",
        ...(init.headers ?? {}),
      },
    });
    if (!res.ok) {
      let body: ApiError = { error: "error", detail: res.statusText };
      try {
        body = (await res.json()) as ApiError;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiRequestError(res.status, body.error, body.detail);
    }
    return (await res.json()) as T;
  }

  nextItem(): Promise<NextResponse> {
    return this.request<NextResponse>("/api/queue/next");
  }

  submit(payload: RecordPayload): Promise<{ stored: string }> {
    return this.request<{ stored: string }>("/api/annotations", {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  progress(): Promise<Progress> {
    return this.request<Progress>("/api/progress");
  }

  schema(): Promise<CriteriaSchema> {
    return this.request<CriteriaSchema>("/api/schema");
  }
}
