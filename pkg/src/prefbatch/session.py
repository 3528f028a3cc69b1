"""Experiment orchestration: query loop, metrics, comparisons, and logs.

A session alternates scoring the candidate pool against the posterior,
selecting a batch, collecting responses, and re-sampling the posterior.
Chain and selection seeds are derived per round from the session seed, and
each chain warm-starts at the previous round's posterior mean, so a stored
response log replays to bitwise-identical posterior means.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .acquisition import SCORE_KINDS, QueryScore, ranking_array, score_pool
from .batch import STRATEGIES, SelectedBatch, select_batch
from .belief import (
    AdaptiveMetropolisConfig,
    PosteriorSamples,
    Response,
    posterior_mean,
    sample_posterior,
)
from .envs import QueryPool, atomic_write_text
from .oracle import Oracle, OracleConfig, sample_w_true

__all__ = [
    "FORMAT_VERSION",
    "ExperimentConfig",
    "WallTimes",
    "IterationRecord",
    "SessionLog",
    "SessionError",
    "ComparisonResult",
    "alignment",
    "run_session",
    "replay_posterior_means",
    "compare_methods",
    "wilcoxon_one_sided",
    "save_session_log",
    "load_session_log",
    "write_comparison_csv",
    "write_p_value_json",
    "derive_seed",
    "posterior_seed",
    "selection_seed",
    "paired_oracle_config",
]

FORMAT_VERSION = "v1"

# Seed streams keep the chain, selection, and per-run draws independent.
_STREAM_POSTERIOR = 0
_STREAM_SELECT = 1
_STREAM_RUN = 2
_STREAM_ORACLE = 3
_STREAM_W_TRUE = 4


def derive_seed(base: int, stream: int, index: int) -> int:
    return int(np.random.SeedSequence([base, stream, index]).generate_state(1)[0])


def paired_oracle_config(
    base_seed: int, run_index: int, d: int, noisy: bool
) -> OracleConfig:
    """Oracle for paired run j: (base seed, j) fix w_true and the noise seed.

    Strategy never enters the derivation, so runs that share (base, j) answer
    from the same hidden preference and form matched pairs across strategies.
    """
    return OracleConfig(
        w_true=sample_w_true(d, derive_seed(base_seed, _STREAM_W_TRUE, run_index)),
        noisy=noisy,
        seed=derive_seed(base_seed, _STREAM_ORACLE, run_index),
    )


def posterior_seed(base: int, round_index: int) -> int:
    """Chain seed for the update after round_index rounds (0 = prior-only)."""
    return derive_seed(base, _STREAM_POSTERIOR, round_index)


def selection_seed(base: int, round_index: int) -> int:
    return derive_seed(base, _STREAM_SELECT, round_index)


def run_seed(base: int, run_index: int) -> int:
    """Session seed for paired run run_index; shared across strategies."""
    return derive_seed(base, _STREAM_RUN, run_index)


def alignment(w_true: np.ndarray, w_hat: np.ndarray) -> float:
    """Cosine similarity between the true and estimated weight vectors."""
    w_true = np.asarray(w_true, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    if w_true.shape != w_hat.shape:
        raise ValueError("alignment requires vectors of equal dimension")
    nt = np.linalg.norm(w_true)
    nh = np.linalg.norm(w_hat)
    if nt == 0.0 or nh == 0.0:
        raise ValueError("alignment is undefined for zero vectors")
    return float(w_true @ w_hat / (nt * nh))


@dataclass(frozen=True)
class ExperimentConfig:
    env_name: str
    k: int
    oracle: OracleConfig
    b: int = 10
    big_b: int = 200
    m: int = 1000
    strategy: str = "successive_elimination"
    score_kind: str = "entropy"
    n_queries_total: int = 150
    am: AdaptiveMetropolisConfig = field(default_factory=AdaptiveMetropolisConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.b < 1 or self.big_b < self.b:
            raise ValueError("need 1 <= b <= B")
        if self.n_queries_total % self.b != 0:
            raise ValueError("n_queries_total must be a multiple of b")
        if self.n_queries_total > self.k:
            raise ValueError("cannot ask more queries than the pool holds")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.score_kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.score_kind!r}")

    def to_json_dict(self) -> dict:
        return {
            "env_name": self.env_name,
            "k": self.k,
            "b": self.b,
            "big_b": self.big_b,
            "m": self.m,
            "strategy": self.strategy,
            "score_kind": self.score_kind,
            "n_queries_total": self.n_queries_total,
            "seed": self.seed,
            "oracle": self.oracle.to_json_dict(),
            "am": vars(self.am).copy(),
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "ExperimentConfig":
        return cls(
            env_name=record["env_name"],
            k=int(record["k"]),
            oracle=OracleConfig.from_json_dict(record["oracle"]),
            b=int(record["b"]),
            big_b=int(record["big_b"]),
            m=int(record["m"]),
            strategy=record["strategy"],
            score_kind=record["score_kind"],
            n_queries_total=int(record["n_queries_total"]),
            am=AdaptiveMetropolisConfig(**record["am"]),
            seed=int(record["seed"]),
        )


@dataclass(frozen=True)
class WallTimes:
    scoring_s: float
    selection_s: float
    sampling_s: float
    per_query_s: float

    @classmethod
    def from_parts(
        cls, scoring: float, selection: float, sampling: float, b: int
    ) -> "WallTimes":
        return cls(scoring, selection, sampling, (scoring + selection + sampling) / b)


@dataclass(frozen=True)
class IterationRecord:
    batch_index: int
    selected: SelectedBatch
    query_scores: tuple[QueryScore, ...]
    responses: tuple[Response, ...]
    alignment: float
    wall_times: WallTimes

    def to_json_dict(self) -> dict:
        return {
            "batch_index": self.batch_index,
            "selected": self.selected.to_json_dict(),
            "query_scores": [vars(q).copy() for q in self.query_scores],
            "responses": [
                {"psi": r.psi.tolist(), "label": r.label} for r in self.responses
            ],
            "alignment": self.alignment,
            "wall_times": vars(self.wall_times).copy(),
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "IterationRecord":
        sel = record["selected"]
        trace = sel["elimination_trace"]
        selected = SelectedBatch(
            indices=np.asarray(sel["indices"], dtype=int),
            scores=np.asarray(sel["scores"], dtype=float),
            strategy=sel["strategy"],
            elimination_trace=None
            if trace is None
            else tuple((int(a), int(b)) for a, b in trace),
        )
        return cls(
            batch_index=int(record["batch_index"]),
            selected=selected,
            query_scores=tuple(QueryScore(**q) for q in record["query_scores"]),
            responses=tuple(
                Response(np.asarray(r["psi"], dtype=float), int(r["label"]))
                for r in record["responses"]
            ),
            alignment=float(record["alignment"]),
            wall_times=WallTimes(**record["wall_times"]),
        )


@dataclass(frozen=True)
class SessionLog:
    config: ExperimentConfig
    iterations: tuple[IterationRecord, ...]
    final_w_hat: np.ndarray
    incomplete: bool = False
    version: str = FORMAT_VERSION


class SessionError(RuntimeError):
    """A round failed; carries the partial log flagged incomplete."""

    def __init__(self, partial_log: SessionLog):
        super().__init__("session aborted mid-round; partial log attached")
        self.partial_log = partial_log


def _posterior_update(
    responses: list[Response],
    d: int,
    cfg: ExperimentConfig,
    round_index: int,
    warm_start: np.ndarray | None,
) -> PosteriorSamples:
    return sample_posterior(
        responses,
        d=d,
        m=cfg.m,
        cfg=cfg.am,
        seed=posterior_seed(cfg.seed, round_index),
        initial_point=warm_start,
    )


def run_session(cfg: ExperimentConfig, pool: QueryPool) -> SessionLog:
    """Run the full N-query loop against a simulated respondent.

    Deterministic given the config seeds, except for recorded wall times.
    Queried candidates leave the pool, so no pair is asked twice.  A failing
    round raises SessionError carrying the partial log.
    """
    if pool.env_name != cfg.env_name:
        raise ValueError(
            f"pool is for {pool.env_name!r} but config expects {cfg.env_name!r}"
        )
    if pool.k != cfg.k:
        raise ValueError(f"pool has K={pool.k} but config expects K={cfg.k}")
    d = pool.d
    if cfg.oracle.w_true.size != d:
        raise ValueError("oracle dimension does not match the pool")
    oracle = Oracle(cfg.oracle)
    n_rounds = cfg.n_queries_total // cfg.b

    posterior = _posterior_update([], d, cfg, 0, None)
    w_hat = posterior_mean(posterior)
    active = np.arange(pool.k)
    responses: list[Response] = []
    iterations: list[IterationRecord] = []
    try:
        for r in range(n_rounds):
            t0 = time.perf_counter()
            scores = score_pool(pool.psi_matrix[active], posterior)
            ranking = ranking_array(scores, cfg.score_kind)
            t1 = time.perf_counter()
            # The pool shrinks as queries retire; clamp the preselection.
            big_b = min(cfg.big_b, active.size)
            local = select_batch(
                cfg.strategy,
                pool.psi_matrix[active],
                ranking,
                cfg.b,
                big_b,
                seed=selection_seed(cfg.seed, r),
            )
            chosen = active[local.indices]
            trace = None
            if local.elimination_trace is not None:
                trace = tuple(
                    (int(active[a]), int(active[k])) for a, k in local.elimination_trace
                )
            selected = SelectedBatch(chosen, local.scores, local.strategy, trace)
            query_scores = tuple(scores[int(i)] for i in local.indices)
            t2 = time.perf_counter()

            new_responses = []
            for pool_idx in chosen:
                cand = pool.candidates[int(pool_idx)]
                new_responses.append(Response(cand.psi, oracle.respond(cand.psi)))
            responses.extend(new_responses)
            active = np.setdiff1d(active, chosen)

            t3 = time.perf_counter()
            posterior = _posterior_update(responses, d, cfg, r + 1, w_hat)
            w_hat = posterior_mean(posterior)
            t4 = time.perf_counter()

            iterations.append(
                IterationRecord(
                    batch_index=r,
                    selected=selected,
                    query_scores=query_scores,
                    responses=tuple(new_responses),
                    alignment=alignment(cfg.oracle.w_true, w_hat),
                    wall_times=WallTimes.from_parts(
                        t1 - t0, t2 - t1, t4 - t3, cfg.b
                    ),
                )
            )
    except Exception as exc:
        partial = SessionLog(cfg, tuple(iterations), w_hat, incomplete=True)
        raise SessionError(partial) from exc
    return SessionLog(cfg, tuple(iterations), w_hat, incomplete=False)


def replay_posterior_means(
    cfg: ExperimentConfig,
    responses_per_round: list[tuple[Response, ...]],
    d: int,
) -> np.ndarray:
    """Recompute the final posterior mean from a stored response sequence.

    Matches run_session's seed derivation and warm-start rule, so the result
    is bitwise identical to the live run's final_w_hat.
    """
    posterior = _posterior_update([], d, cfg, 0, None)
    w_hat = posterior_mean(posterior)
    responses: list[Response] = []
    for r, batch_responses in enumerate(responses_per_round):
        responses.extend(batch_responses)
        posterior = _posterior_update(responses, d, cfg, r + 1, w_hat)
        w_hat = posterior_mean(posterior)
    return w_hat


def _exact_upper_tail_p(w_plus: float, ranks: np.ndarray) -> float:
    # Doubled midranks are integers, so the null distribution of the doubled
    # statistic is a finite convolution over sign assignments.
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    target = int(np.rint(2.0 * w_plus))
    return float(counts[target:].sum() / 2.0 ** len(ranks))


def wilcoxon_one_sided(x: np.ndarray, y: np.ndarray) -> float:
    """Paired signed-rank p-value for the alternative that x exceeds y.

    Zero differences are dropped; ties share midranks.  The null is exact up
    to 25 remaining pairs and a continuity-corrected normal approximation
    beyond.  With no nonzero differences the test is uninformative (p = 1).
    """
    diffs = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return 1.0
    ranks = rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0.0].sum())
    if n <= 25:
        return _exact_upper_tail_p(w_plus, ranks)
    mu = n * (n + 1) / 4.0
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
    z = (w_plus - mu - 0.5) / sigma
    return float(1.0 - ndtr(z))


@dataclass(frozen=True)
class ComparisonResult:
    strategies: tuple[str, ...]
    rows: tuple[tuple, ...]  # (strategy, run, round, n_queries, m, per_query_s)
    final_m: dict  # strategy -> list of final alignments, run-aligned
    mean_trajectories: dict  # strategy -> np.ndarray of mean m per round
    p_values: dict  # strategy -> strategy -> one-sided p


def compare_methods(
    cfgs: list[ExperimentConfig], pool: QueryPool, runs: int, jobs: int = 1
) -> ComparisonResult:
    """Run each strategy over paired seeds and test pairwise final alignment.

    Run j of every strategy shares one true weight vector and oracle seed, so
    the final alignments form matched pairs for the signed-rank test.  With
    jobs > 1 the independent runs execute concurrently; results are assembled
    in a fixed order, so the output does not depend on jobs.
    """
    if runs < 5:
        raise ValueError("need at least 5 paired runs")
    if not cfgs:
        raise ValueError("no configurations given")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    base = cfgs[0]
    reference = {
        k: v for k, v in base.to_json_dict().items() if k not in ("strategy",)
    }
    for cfg in cfgs[1:]:
        other = {
            k: v for k, v in cfg.to_json_dict().items() if k not in ("strategy",)
        }
        if other != reference:
            raise ValueError("configurations may differ only in strategy")
    strategies = tuple(c.strategy for c in cfgs)
    if len(set(strategies)) != len(strategies):
        raise ValueError("duplicate strategies in comparison")

    d = pool.d
    run_cfgs = {}
    for j in range(runs):
        oracle_cfg = paired_oracle_config(base.seed, j, d, base.oracle.noisy)
        seed_j = run_seed(base.seed, j)
        for cfg in cfgs:
            run_cfgs[(cfg.strategy, j)] = replace(
                cfg, oracle=oracle_cfg, seed=seed_j
            )
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = {
                key: executor.submit(run_session, rc, pool)
                for key, rc in run_cfgs.items()
            }
            logs = {key: future.result() for key, future in futures.items()}
    else:
        logs = {key: run_session(rc, pool) for key, rc in run_cfgs.items()}

    rows = []
    final_m: dict[str, list[float]] = {s: [] for s in strategies}
    trajectories: dict[str, list[np.ndarray]] = {s: [] for s in strategies}
    for j in range(runs):
        for cfg in cfgs:
            log = logs[(cfg.strategy, j)]
            curve = np.array([it.alignment for it in log.iterations])
            trajectories[cfg.strategy].append(curve)
            final_m[cfg.strategy].append(float(curve[-1]))
            for it in log.iterations:
                rows.append(
                    (
                        cfg.strategy,
                        j,
                        it.batch_index,
                        (it.batch_index + 1) * cfg.b,
                        it.alignment,
                        it.wall_times.per_query_s,
                    )
                )

    mean_trajectories = {
        s: np.vstack(curves).mean(axis=0) for s, curves in trajectories.items()
    }
    p_values: dict[str, dict[str, float]] = {}
    for si in strategies:
        p_values[si] = {}
        for sj in strategies:
            p_values[si][sj] = wilcoxon_one_sided(
                np.array(final_m[si]), np.array(final_m[sj])
            )
    return ComparisonResult(
        strategies=strategies,
        rows=tuple(rows),
        final_m=final_m,
        mean_trajectories=mean_trajectories,
        p_values=p_values,
    )


def save_session_log(log: SessionLog, path: str) -> None:
    header = {
        "version": log.version,
        "config": log.config.to_json_dict(),
        "incomplete": log.incomplete,
        "final_w_hat": log.final_w_hat.tolist(),
    }
    lines = [json.dumps(header)]
    lines.extend(json.dumps(it.to_json_dict()) for it in log.iterations)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_session_log(path: str) -> SessionLog:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        iterations = tuple(
            IterationRecord.from_json_dict(json.loads(line))
            for line in fh
            if line.strip()
        )
    return SessionLog(
        config=ExperimentConfig.from_json_dict(header["config"]),
        iterations=iterations,
        final_w_hat=np.asarray(header["final_w_hat"], dtype=float),
        incomplete=bool(header["incomplete"]),
        version=header["version"],
    )


def write_comparison_csv(result: ComparisonResult, path: str) -> None:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["strategy", "run", "round", "n_queries", "m", "per_query_seconds"]
    )
    writer.writerows(result.rows)
    atomic_write_text(path, buffer.getvalue())


def write_p_value_json(result: ComparisonResult, path: str) -> None:
    record = {"strategies": list(result.strategies), "p_values": result.p_values}
    atomic_write_text(path, json.dumps(record, indent=2) + "\n")
