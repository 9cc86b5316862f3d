/** Typed client and session state machine for the cforge session service.
 *
 * The client mirrors the service's state machine (awaiting-context ->
 * awaiting-choice -> awaiting-context | finished) and attaches a fresh
 * Idempotency-Key to each pending choice, so retries and double-clicks
 * never produce a duplicate weight update.
 */

export interface DomainAttribute {
  name: string;
  kind: string;
  values: string[];
}

export interface DomainInfo {
  id: string;
  d: number;
  attributes: DomainAttribute[];
  contextual: boolean;
  cities: string[];
}

export interface QueryOption {
  index: number;
  values: Record<string, string | number | boolean>;
  estimated_utility: number;
}

export interface QueryDiagnostics {
  gamma: number;
  delta: number;
  mu: number;
  solver_status: string;
  wall_ms: number;
}

export interface QueryPayload {
  options: QueryOption[];
  diagnostics: QueryDiagnostics;
}

export type SessionState = "awaiting-context" | "awaiting-choice" | "finished";

export interface SessionSummary {
  id: string;
  domain: string;
  k: number;
  T: number | null;
  state: SessionState;
  t: number;
  eta: number;
  query?: QueryPayload;
  context?: { label: string | null };
}

export interface TraceRow {
  t: number;
  gamma: number;
  eta: number;
  delta_norm: number;
  chosen_index: number;
  query_features: number[][];
  diagnostics: Record<string, unknown>;
  regret: number | null;
}

export interface Trace {
  id: string;
  rows: TraceRow[];
  weights: number[];
  replay: number[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service responded ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    ...init,
    headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body: keep the status text */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  domains(): Promise<DomainInfo[]> {
    return request(`${this.baseUrl}/domains`);
  }

  createSession(domain: string, k: number, T?: number): Promise<SessionSummary> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify(T === undefined ? { domain, k } : { domain, k, T }),
    });
  }

  getSession(id: string): Promise<SessionSummary> {
    return request(`${this.baseUrl}/sessions/${id}`);
  }

  postQuery(id: string, mustVisit?: string[]): Promise<SessionSummary> {
    return request(`${this.baseUrl}/sessions/${id}/query`, {
      method: "POST",
      body: JSON.stringify(mustVisit ? { must_visit: mustVisit } : {}),
    });
  }

  postChoice(
    id: string,
    chosen: number,
    idempotencyKey: string,
  ): Promise<SessionSummary> {
    return request(`${this.baseUrl}/sessions/${id}/choice`, {
      method: "POST",
      headers: { "Idempotency-Key": idempotencyKey },
      body: JSON.stringify({ chosen }),
    });
  }

  trace(id: string): Promise<Trace> {
    return request(`${this.baseUrl}/sessions/${id}/trace`);
  }
}

function freshKey(): string {
  if (typeof crypto !== "undefined" && crypto.randomUUID) {
    return crypto.randomUUID();
  }
  return `k-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export interface HistoryEntry {
  t: number;
  chosen: number;
  contextLabel: string | null;
  diagnostics: QueryDiagnostics;
}

/** One live session as seen from a browser tab. */
export class SessionFlow {
  summary: SessionSummary | null = null;
  history: HistoryEntry[] = [];
  private pendingKey: string | null = null;

  constructor(readonly client: ApiClient) {}

  get state(): SessionState | "idle" {
    return this.summary?.state ?? "idle";
  }

  async start(domain: string, k: number, T?: number): Promise<SessionSummary> {
    this.summary = await this.client.createSession(domain, k, T);
    this.history = [];
    this.pendingKey = null;
    return this.summary;
  }

  /** Fetch the next query; context (e.g. must-visit cities) is optional. */
  async requestQuery(mustVisit?: string[]): Promise<SessionSummary> {
    if (!this.summary) throw new Error("no active session");
    if (this.summary.state !== "awaiting-context") {
      throw new Error(`cannot query while ${this.summary.state}`);
    }
    this.summary = await this.client.postQuery(this.summary.id, mustVisit);
    this.pendingKey = freshKey();
    return this.summary;
  }

  /** Submit a 1-based card choice. Re-submitting the same pending choice
   * (double click, retry after a network error) reuses the idempotency key,
   * so the service applies at most one update. */
  async submitChoice(chosen: number): Promise<SessionSummary> {
    if (!this.summary) throw new Error("no active session");
    if (this.summary.state !== "awaiting-choice") {
      throw new Error(`cannot choose while ${this.summary.state}`);
    }
    const pending = this.summary.query;
    const contextLabel = this.summary.context?.label ?? null;
    const key = this.pendingKey ?? freshKey();
    this.pendingKey = key;
    const t = this.summary.t;
    this.summary = await this.client.postChoice(this.summary.id, chosen, key);
    if (pending && this.history[this.history.length - 1]?.t !== t) {
      this.history.push({
        t,
        chosen,
        contextLabel,
        diagnostics: pending.diagnostics,
      });
    }
    if (this.summary.state !== "awaiting-choice") {
      this.pendingKey = null;
    }
    return this.summary;
  }

  /** Re-read the service's view after a 409 (e.g. another tab moved on). */
  async refresh(): Promise<SessionSummary> {
    if (!this.summary) throw new Error("no active session");
    this.summary = await this.client.getSession(this.summary.id);
    return this.summary;
  }
}
