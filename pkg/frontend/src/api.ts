import type {
  ApiErrorBody,
  Basis,
  ClustersResponse,
  IrrResponse,
  LabelRecord,
  ProjectionResponse,
  QueueResponse,
  ReportResponse,
  RubricResponse,
} from "./types.js";

/** A 4xx/5xx response whose body carried the service's error shape. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface LabelSubmission {
  post_id: string;
  value: string;
  rater_id: string;
  basis: Basis;
}

async function parseError(resp: Response): Promise<ApiError> {
  let body: Partial<ApiErrorBody> = {};
  try {
    body = await resp.json();
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(
    resp.status,
    body.code ?? "http_error",
    body.message ?? resp.statusText,
  );
}

/** Thin typed client over the primary service's /api endpoints. */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    return resp.json() as Promise<T>;
  }

  queue(limit = 50, basis: Basis = "post_only"): Promise<QueueResponse> {
    const q = new URLSearchParams({ limit: String(limit), basis });
    return this.get(`/api/queue?${q}`);
  }

  clusters(): Promise<ClustersResponse> {
    return this.get("/api/clusters");
  }

  async submitLabel(sub: LabelSubmission): Promise<LabelRecord> {
    const resp = await fetch(this.baseUrl + "/api/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(sub),
    });
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }

  labels(params: { post_id?: string; rater_id?: string; basis?: Basis; source?: string } = {}): Promise<{ records: LabelRecord[] }> {
    const q = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) q.set(key, value);
    }
    const suffix = q.size > 0 ? `?${q}` : "";
    return this.get(`/api/labels${suffix}`);
  }

  irr(basis: Basis = "post_only", raterA?: string, raterB?: string): Promise<IrrResponse> {
    const q = new URLSearchParams({ basis });
    if (raterA) q.set("rater_a", raterA);
    if (raterB) q.set("rater_b", raterB);
    return this.get(`/api/irr?${q}`);
  }

  projection(): Promise<ProjectionResponse> {
    return this.get("/api/projection");
  }

  report(): Promise<ReportResponse> {
    return this.get("/api/report");
  }

  rubric(): Promise<RubricResponse> {
    return this.get("/api/rubric");
  }
}
