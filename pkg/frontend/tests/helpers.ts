import {
  ApiError,
  type BatchPayload,
  type Choice,
  type CreateSessionOptions,
  type PosteriorSummary,
  type QueryPayload,
  type SessionCreated,
  type SessionTransport,
  type SubmitResult,
  type TrajectoryData,
} from "../src/api.js";

export function ldsTrajectory(features: number[]): TrajectoryData {
  return { states: [features.map(() => 0), [...features]] };
}

export function driverTrajectory(horizon: number): TrajectoryData {
  const states: number[][] = [];
  const other: number[][] = [];
  for (let t = 0; t <= horizon; t += 1) {
    states.push([0.1 * Math.sin(t / 8), t * 0.1, 0.02 * t, 1]);
    other.push([0.4, t * 0.08, 0, 0.8]);
  }
  return { states, other_states: other };
}

export function tosserTrajectory(horizon: number): TrajectoryData {
  const states: number[][] = [];
  for (let t = 0; t <= horizon; t += 1) {
    const time = t * 0.01;
    states.push([3 * time, 1 + 4 * time - 4.905 * time * time, 3, 4 - 9.81 * time]);
  }
  return { states };
}

export function makeQuery(round: number, index: number): QueryPayload {
  return {
    query_id: `r${round}-i${index}`,
    pool_index: index,
    a: ldsTrajectory([0.1 * index, -0.2, 0.3, 0.05]),
    b: ldsTrajectory([-0.4, 0.1 * index, -0.1, 0.2]),
  };
}

export function makeBatch(
  round: number,
  size: number,
  answered: Record<string, Choice> = {},
): BatchPayload {
  return {
    v: "1",
    round,
    queries: Array.from({ length: size }, (_, i) => makeQuery(round, i)),
    answered,
  };
}

export function makePosterior(d = 4, m = 1000): PosteriorSummary {
  const bins = 41;
  return {
    v: "1",
    mean: Array.from({ length: d }, (_, i) => 0.3 - 0.15 * i),
    std: Array.from({ length: d }, () => 0.2),
    histograms: Array.from({ length: d }, () => {
      const row = Array.from({ length: bins }, () => 1);
      row[Math.floor(bins / 2)] = m - (bins - 1);
      return row;
    }),
    bin_edges: Array.from({ length: bins + 1 }, (_, i) => -1 + (2 * i) / bins),
    m,
    n_queries: 10,
  };
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

/**
 * Scripted server: a fixed sequence of batches, one shared posterior.
 * Submissions complete batches in order; failure modes are one-shot flags.
 */
export class FakeApi implements SessionTransport {
  readonly submissions: Array<{ queryId: string; choice: Choice }> = [];
  getBatchCalls = 0;
  /** Next submitResponse rejects with this error, then the flag clears. */
  failNext: Error | null = null;
  /** Query ids that 409 once, as if another tab already answered them. */
  readonly conflictIds = new Set<string>();
  /** When true, submissions stall until releaseHeld(). */
  hold = false;

  private held: Array<{ queryId: string; choice: Choice; gate: Deferred<SubmitResult> }> = [];
  private roundIndex = 0;
  private answeredMap: Record<string, Choice>;

  constructor(
    private rounds: BatchPayload[],
    private posterior: PosteriorSummary = makePosterior(),
  ) {
    this.answeredMap = { ...(rounds[0]?.answered ?? {}) };
  }

  get heldCount(): number {
    return this.held.length;
  }

  releaseHeld(): void {
    for (const entry of this.held.splice(0)) {
      entry.gate.resolve(this.complete(entry.queryId, entry.choice));
    }
  }

  async createSession(env: string, options: CreateSessionOptions = {}): Promise<SessionCreated> {
    const first = this.rounds[0];
    if (!first) throw new Error("no scripted batches");
    return {
      v: "1",
      session_id: "s-test",
      env,
      env_info:
        env === "driver2d"
          ? { name: env, horizon: 50, dt: 0.1, lane_centers: [-0.4, 0, 0.4], nominal_speed: 1 }
          : env === "tosser2d"
            ? { name: env, horizon: 100, baskets: [[4, 0], [8, 0]], gravity: 9.81 }
            : { name: env, horizon: 1 },
      config: {
        env,
        k: 100,
        d: 4,
        b: first.queries.length,
        big_b: 200,
        m: this.posterior.m,
        strategy: "greedy",
        score_kind: "entropy",
        seed: options.seed ?? 0,
      },
      batch: first,
    };
  }

  async getBatch(): Promise<BatchPayload> {
    this.getBatchCalls += 1;
    const current = this.rounds[this.roundIndex];
    if (!current) throw new ApiError(409, "query pool exhausted");
    return { ...current, answered: { ...this.answeredMap } };
  }

  submitResponse(_sessionId: string, queryId: string, choice: Choice): Promise<SubmitResult> {
    if (this.failNext) {
      const err = this.failNext;
      this.failNext = null;
      return Promise.reject(err);
    }
    if (this.conflictIds.has(queryId)) {
      this.conflictIds.delete(queryId);
      this.answeredMap[queryId] = this.answeredMap[queryId] ?? "B";
      return Promise.reject(new ApiError(409, "response already recorded"));
    }
    this.submissions.push({ queryId, choice });
    if (this.hold) {
      const gate = deferred<SubmitResult>();
      this.held.push({ queryId, choice, gate });
      return gate.promise;
    }
    return Promise.resolve(this.complete(queryId, choice));
  }

  async getPosterior(): Promise<PosteriorSummary> {
    return this.posterior;
  }

  private complete(queryId: string, choice: Choice): SubmitResult {
    this.answeredMap[queryId] = choice;
    const current = this.rounds[this.roundIndex];
    if (!current) throw new Error("submission after exhaustion");
    const remaining = current.queries.filter((q) => !(q.query_id in this.answeredMap)).length;
    if (remaining > 0) {
      return { v: "1", status: "recorded", remaining };
    }
    this.roundIndex += 1;
    this.answeredMap = {};
    const next = this.rounds[this.roundIndex] ?? null;
    return {
      v: "1",
      status: "batch_complete",
      posterior: this.posterior,
      next_batch: next,
      exhausted: next === null,
    };
  }
}
