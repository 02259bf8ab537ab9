/** Thin typed client for the review service's /v1 API. */

import {
  AnnotationRecord,
  LabelPayload,
  Progress,
  Route,
  RouteSummary,
} from "./model.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token: string | null = null,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      ...(init?.headers as Record<string, string> | undefined),
    };
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers,
    });
    const body = await response.json();
    if (!response.ok) {
      const detail = body?.detail ?? body ?? {};
      throw new ApiError(
        response.status,
        detail.code ?? "error",
        detail.message ?? response.statusText,
      );
    }
    return body as T;
  }

  listRoutes(): Promise<RouteSummary[]> {
    return this.request("/v1/routes");
  }

  getRoute(id: string): Promise<Route> {
    return this.request(`/v1/routes/${encodeURIComponent(id)}`);
  }

  postLabel(
    routeId: string,
    stepIndex: number,
    payload: LabelPayload,
  ): Promise<AnnotationRecord> {
    return this.request(
      `/v1/routes/${encodeURIComponent(routeId)}/steps/${stepIndex}/label`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      },
    );
  }

  getProgress(): Promise<Progress> {
    return this.request("/v1/progress");
  }

  getMetrics(): Promise<Record<string, unknown>> {
    return this.request("/v1/metrics");
  }
}
