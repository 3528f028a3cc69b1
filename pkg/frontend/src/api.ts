/** Typed client for the preference-session HTTP API. */

export type Choice = "A" | "B";

export interface TrajectoryData {
  states: number[][];
  other_states?: number[][];
}

export interface QueryPayload {
  query_id: string;
  pool_index: number;
  a: TrajectoryData;
  b: TrajectoryData;
}

export interface BatchPayload {
  v: string;
  round: number;
  queries: QueryPayload[];
  answered: Record<string, Choice>;
}

export interface PosteriorSummary {
  v: string;
  mean: number[];
  std: number[];
  histograms: number[][];
  bin_edges: number[];
  m: number;
  n_queries: number;
}

export interface EnvInfo {
  name: string;
  horizon: number;
  dt?: number;
  lane_centers?: number[];
  nominal_speed?: number;
  baskets?: number[][];
  gravity?: number;
  release_height?: number;
}

export interface SessionConfig {
  env: string;
  k: number;
  d: number;
  b: number;
  big_b: number;
  m: number;
  strategy: string;
  score_kind: string;
  seed: number;
}

export interface SessionCreated {
  v: string;
  session_id: string;
  env: string;
  env_info: EnvInfo;
  config: SessionConfig;
  batch: BatchPayload;
}

export interface SubmitRecorded {
  v: string;
  status: "recorded";
  remaining: number;
}

export interface SubmitBatchComplete {
  v: string;
  status: "batch_complete";
  posterior: PosteriorSummary;
  next_batch: BatchPayload | null;
  exhausted: boolean;
}

export type SubmitResult = SubmitRecorded | SubmitBatchComplete;

export interface CreateSessionOptions {
  seed?: number;
  b?: number;
  big_b?: number;
  m?: number;
  strategy?: string;
  score_kind?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** What the view model needs from the server; SessionApi is the HTTP implementation. */
export interface SessionTransport {
  createSession(env: string, options?: CreateSessionOptions): Promise<SessionCreated>;
  getBatch(sessionId: string): Promise<BatchPayload>;
  submitResponse(sessionId: string, queryId: string, choice: Choice): Promise<SubmitResult>;
  getPosterior(sessionId: string): Promise<PosteriorSummary>;
}

export class SessionApi implements SessionTransport {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  createSession(env: string, options: CreateSessionOptions = {}): Promise<SessionCreated> {
    return this.request("POST", "/sessions", { env, ...options });
  }

  getBatch(sessionId: string): Promise<BatchPayload> {
    return this.request("GET", `/sessions/${sessionId}/batch`);
  }

  submitResponse(sessionId: string, queryId: string, choice: Choice): Promise<SubmitResult> {
    return this.request("POST", `/sessions/${sessionId}/responses`, {
      query_id: queryId,
      choice,
    });
  }

  getPosterior(sessionId: string): Promise<PosteriorSummary> {
    return this.request("GET", `/sessions/${sessionId}/posterior`);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        if (typeof payload?.detail === "string") detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response.json() as Promise<T>;
  }
}
