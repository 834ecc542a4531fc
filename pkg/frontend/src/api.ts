import type {
  ActuatorId,
  ActuatorMode,
  ActuatorState,
  ConditionNow,
  Snapshot,
  StoredRecord,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

/** Short human-readable reason out of an error body like {"error": "bad_mode", "detail": …}. */
export function describeApiError(err: unknown): string {
  if (err instanceof ApiError) {
    const body = err.body;
    if (body && typeof body === "object") {
      const rec = body as Record<string, unknown>;
      const code = typeof rec.error === "string" ? rec.error : `http ${err.status}`;
      const detail = typeof rec.detail === "string" ? `: ${rec.detail}` : "";
      return `${code}${detail}`;
    }
    return `http ${err.status}`;
  }
  return err instanceof Error ? err.message : String(err);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  streamUrl(): string {
    return `${this.base}/api/v1/stream`;
  }

  latest(): Promise<Snapshot> {
    return this.request<Snapshot>("/api/v1/latest");
  }

  conditionNow(): Promise<ConditionNow> {
    return this.request<ConditionNow>("/api/v1/condition");
  }

  async actuators(): Promise<ActuatorState[]> {
    const body = await this.request<{ actuators: ActuatorState[] }>("/api/v1/actuators");
    return body.actuators;
  }

  async history(fromTs: number, toTs: number): Promise<StoredRecord[]> {
    const body = await this.request<{ records: StoredRecord[]; count: number }>(
      `/api/v1/history?from=${fromTs}&to=${toTs}`,
    );
    return body.records;
  }

  setOverride(id: ActuatorId, mode: ActuatorMode): Promise<ActuatorState> {
    return this.request<ActuatorState>(`/api/v1/actuators/${id}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode }),
    });
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, init);
    const text = await res.text();
    let body: unknown;
    try {
      body = text === "" ? null : JSON.parse(text);
    } catch {
      throw new ApiError(res.status, text, `invalid JSON from ${path}`);
    }
    if (!res.ok) {
      throw new ApiError(res.status, body);
    }
    return body as T;
  }
}
