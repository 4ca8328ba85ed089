/** Typed HTTP client for the workbench service.
 *
 * The UI is a pure client: every number it renders comes from one of these
 * calls, never from client-side refitting or prediction.
 */

import type {
  AnchorsPayload,
  ApiErrorBody,
  AuditPayload,
  ConstraintRecord,
  JobStatus,
  SessionSummary,
  SlicePayload,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message ?? `request failed with status ${status}`);
    this.code = body.code ?? "error";
    this.status = status;
    this.body = body;
  }
}

export type ConstraintOp =
  | { op: "add"; constraint: Partial<ConstraintRecord> }
  | { op: "remove"; index: number }
  | { op: "edit"; index: number; constraint: Partial<ConstraintRecord> };

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class WorkbenchApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body as ApiErrorBody);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  createSession(csv: string, config: Record<string, unknown>): Promise<SessionSummary> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ csv, config }),
    });
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request(`/sessions/${id}`);
  }

  getSlice(
    id: string,
    iteration: number,
    axis: number,
    anchor: number[],
    resolution = 101,
  ): Promise<SlicePayload> {
    const params = new URLSearchParams({
      axis: String(axis),
      anchor: anchor.join(","),
      resolution: String(resolution),
    });
    return this.request(`/sessions/${id}/iterations/${iteration}/slice?${params}`);
  }

  getAnchors(id: string, count = 5): Promise<AnchorsPayload> {
    return this.request(`/sessions/${id}/anchors?count=${count}`);
  }

  updateConstraints(id: string, operations: ConstraintOp[]): Promise<{ constraints: ConstraintRecord[] }> {
    return this.request(`/sessions/${id}/constraints`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ operations }),
    });
  }

  refit(id: string): Promise<{ status: string }> {
    return this.request(`/sessions/${id}/refit`, { method: "POST" });
  }

  jobStatus(id: string): Promise<JobStatus> {
    return this.request(`/sessions/${id}/job`);
  }

  audit(id: string, iteration: number, seed = 0, anchors?: number, line?: number): Promise<AuditPayload> {
    const params = new URLSearchParams({ seed: String(seed) });
    if (anchors !== undefined) params.set("anchors", String(anchors));
    if (line !== undefined) params.set("line", String(line));
    return this.request(`/sessions/${id}/iterations/${iteration}/audit?${params}`);
  }

  exportModel(id: string, iteration?: number): Promise<Record<string, unknown>> {
    const suffix = iteration === undefined ? "" : `?iteration=${iteration}`;
    return this.request(`/sessions/${id}/export${suffix}`);
  }

  /** Poll the refit job until it leaves the fitting state. */
  async waitForJob(id: string, pollMs = 400, timeoutMs = 600_000): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.jobStatus(id);
      if (status.status !== "fitting") return status;
      if (Date.now() > deadline) throw new Error("refit did not finish in time");
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }
}
