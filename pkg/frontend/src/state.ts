import {
  ApiError,
  type BatchPayload,
  type Choice,
  type CreateSessionOptions,
  type EnvInfo,
  type PosteriorSummary,
  type QueryPayload,
  type SessionConfig,
  type SessionTransport,
} from "./api.js";

export type Phase = "loading" | "answering" | "exhausted" | "failed";

export interface PendingRetry {
  queryId: string;
  choice: Choice;
  message: string;
}

/**
 * Session view model: one batch at a time, exactly one active query,
 * choices immutable once acknowledged by the server.
 */
export class SessionStore {
  phase: Phase = "loading";
  sessionId = "";
  config: SessionConfig | null = null;
  envInfo: EnvInfo | null = null;
  batch: BatchPayload | null = null;
  posterior: PosteriorSummary | null = null;
  posteriorUpdates = 0;
  answeredTotal = 0;
  exhausted = false;
  /** A failed submission waiting for the user to retry; choice preserved. */
  retry: PendingRetry | null = null;
  error = "";

  private answered = new Map<string, Choice>();
  private submitting = false;
  private listeners = new Set<() => void>();

  constructor(private api: SessionTransport) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  async start(env: string, options: CreateSessionOptions = {}): Promise<void> {
    this.phase = "loading";
    this.notify();
    try {
      const created = await this.api.createSession(env, options);
      this.sessionId = created.session_id;
      this.config = created.config;
      this.envInfo = created.env_info;
      this.loadBatch(created.batch);
      this.phase = "answering";
    } catch (err) {
      this.phase = "failed";
      this.error = describe(err);
    }
    this.notify();
  }

  /** The first unanswered query in server order; null between batches. */
  get currentQuery(): QueryPayload | null {
    if (!this.batch) return null;
    return this.batch.queries.find((q) => !this.answered.has(q.query_id)) ?? null;
  }

  isAnswered(queryId: string): boolean {
    return this.answered.has(queryId);
  }

  choiceFor(queryId: string): Choice | undefined {
    return this.answered.get(queryId);
  }

  get round(): number {
    return this.batch?.round ?? 0;
  }

  get batchProgress(): { done: number; size: number } {
    const size = this.batch?.queries.length ?? 0;
    const done = this.batch
      ? this.batch.queries.filter((q) => this.answered.has(q.query_id)).length
      : 0;
    return { done, size };
  }

  get busy(): boolean {
    return this.submitting;
  }

  /** Submit the active query's answer; duplicate calls while in flight are dropped. */
  async choose(choice: Choice): Promise<void> {
    const query = this.currentQuery;
    if (!query || this.submitting || this.retry) return;
    await this.submit(query.query_id, choice);
  }

  /** Re-send the preserved choice after a network failure. */
  async retrySubmit(): Promise<void> {
    const pending = this.retry;
    if (!pending || this.submitting) return;
    this.retry = null;
    await this.submit(pending.queryId, pending.choice);
  }

  private async submit(queryId: string, choice: Choice): Promise<void> {
    this.submitting = true;
    this.notify();
    try {
      const result = await this.api.submitResponse(this.sessionId, queryId, choice);
      this.answered.set(queryId, choice);
      this.answeredTotal += 1;
      if (result.status === "batch_complete") {
        this.posterior = result.posterior;
        this.posteriorUpdates += 1;
        if (result.next_batch) {
          this.loadBatch(result.next_batch);
        } else {
          this.batch = null;
          this.exhausted = true;
          this.phase = "exhausted";
        }
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Already answered server-side: adopt the server's record.
        await this.resync(queryId);
      } else {
        this.retry = { queryId, choice, message: describe(err) };
      }
    } finally {
      this.submitting = false;
      this.notify();
    }
  }

  private async resync(queryId: string): Promise<void> {
    try {
      const batch = await this.api.getBatch(this.sessionId);
      this.loadBatch(batch, true);
    } catch {
      // Exhausted or unreachable; at minimum unblock the conflicting query.
      if (!this.answered.has(queryId)) this.answered.set(queryId, "A");
    }
  }

  private loadBatch(batch: BatchPayload, merge = false): void {
    this.batch = batch;
    if (!merge) this.answered.clear();
    for (const [queryId, choice] of Object.entries(batch.answered)) {
      if (!this.answered.has(queryId)) {
        this.answered.set(queryId, choice);
        this.answeredTotal += 1;
      }
    }
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }
}

function describe(err: unknown): string {
  if (err instanceof Error) return err.message;
  return String(err);
}
