"""HTTP session service for interactive preference elicitation.

Each session walks the same loop as a simulated run, but with a human (or a
scripted client) answering instead of an oracle: serve a batch of b query
pairs with renderable trajectories, collect all b answers, re-sample the
posterior once, select the next batch.  Every state change is appended to a
per-session JSON-lines event log before the request is acknowledged, and the
update path shares the simulation loop's seed derivation, so a persisted log
replays to the identical posterior means.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .acquisition import SCORE_KINDS, ranking_array, score_pool
from .batch import STRATEGIES, select_batch
from .belief import (
    AdaptiveMetropolisConfig,
    PosteriorSamples,
    Response,
    posterior_mean,
    sample_posterior,
)
from .envs import QueryPool, make_env
from .oracle import OracleConfig
from .session import (
    ExperimentConfig,
    posterior_seed,
    replay_posterior_means,
    selection_seed,
)

__all__ = [
    "PAYLOAD_VERSION",
    "HISTOGRAM_BINS",
    "create_app",
    "replay_event_log",
]

PAYLOAD_VERSION = "v1"
HISTOGRAM_BINS = 41


class CreateSessionRequest(BaseModel):
    env: str
    b: int | None = None
    big_b: int | None = None
    m: int | None = None
    strategy: str | None = None
    score_kind: str | None = None
    seed: int | None = None


class SubmitResponseRequest(BaseModel):
    query_id: str
    choice: Literal["A", "B"]


@dataclass
class _SessionState:
    id: str
    pool: QueryPool
    env: object
    b: int
    big_b: int
    m: int
    strategy: str
    score_kind: str
    seed: int
    am: AdaptiveMetropolisConfig
    log_path: str
    round: int = 0
    active: np.ndarray = None  # type: ignore[assignment]
    posterior: PosteriorSamples = None  # type: ignore[assignment]
    w_hat: np.ndarray = None  # type: ignore[assignment]
    responses: list = field(default_factory=list)
    issued: dict = field(default_factory=dict)  # query id -> pool index
    pending_ids: list = field(default_factory=list)  # current batch, in order
    answered: dict = field(default_factory=dict)  # query id -> choice
    exhausted: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def n_answered(self) -> int:
        return len(self.answered)

    def unanswered_pending(self) -> list:
        return [qid for qid in self.pending_ids if qid not in self.answered]


def _append_event(state: _SessionState, event: dict) -> None:
    # Persist before acknowledging, so a crash never loses an acked answer.
    with open(state.log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(event) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _config_payload(state: _SessionState) -> dict:
    return {
        "env": state.pool.env_name,
        "k": state.pool.k,
        "d": state.pool.d,
        "b": state.b,
        "big_b": state.big_b,
        "m": state.m,
        "strategy": state.strategy,
        "score_kind": state.score_kind,
        "seed": state.seed,
        "am": vars(state.am).copy(),
    }


def _env_info(env) -> dict:
    info = {"name": env.spec.name, "horizon": env.spec.horizon}
    for attr in ("DT", "LANE_CENTERS", "NOMINAL_SPEED", "BASKETS", "GRAVITY"):
        if hasattr(type(env), attr):
            value = getattr(env, attr)
            info[attr.lower()] = (
                [list(v) if isinstance(v, tuple) else v for v in value]
                if isinstance(value, tuple)
                else value
            )
    if hasattr(env, "release_height"):
        info["release_height"] = env.release_height
    return info


def _trajectory_payload(state: _SessionState, pool_index: int) -> dict:
    cand = state.pool.candidates[pool_index]
    payload = {}
    for side, controls in (("a", cand.u_h_a), ("b", cand.u_h_b)):
        traj = state.env.rollout(cand.x0, controls, cand.u_r)
        entry = {"states": traj.states.tolist()}
        if state.pool.env_name == "driver2d":
            entry["other_states"] = state.env.other_car_states(cand.u_r).tolist()
        payload[side] = entry
    return payload


def _batch_payload(state: _SessionState, include_trajectories: bool = True) -> dict:
    queries = []
    for qid in state.pending_ids:
        entry = {"query_id": qid, "pool_index": int(state.issued[qid])}
        if include_trajectories:
            entry.update(_trajectory_payload(state, state.issued[qid]))
        queries.append(entry)
    return {
        "v": PAYLOAD_VERSION,
        "round": state.round,
        "queries": queries,
        "answered": {
            qid: state.answered[qid]
            for qid in state.pending_ids
            if qid in state.answered
        },
    }


def _posterior_summary(state: _SessionState) -> dict:
    samples = state.posterior.samples
    edges = np.linspace(-1.0, 1.0, HISTOGRAM_BINS + 1)
    histograms = [
        np.histogram(samples[:, j], bins=edges)[0].tolist()
        for j in range(samples.shape[1])
    ]
    return {
        "v": PAYLOAD_VERSION,
        "mean": state.w_hat.tolist(),
        "std": samples.std(axis=0).tolist(),
        "histograms": histograms,
        "bin_edges": edges.tolist(),
        "m": samples.shape[0],
        "n_queries": state.n_answered,
    }


def _select_next_batch(state: _SessionState) -> bool:
    """Select and persist the next pending batch; False when the pool is spent."""
    if state.active.size < state.b:
        state.exhausted = True
        state.pending_ids = []
        return False
    scores = score_pool(state.pool.psi_matrix[state.active], state.posterior)
    ranking = ranking_array(scores, state.score_kind)
    big_b = min(state.big_b, state.active.size)
    local = select_batch(
        state.strategy,
        state.pool.psi_matrix[state.active],
        ranking,
        state.b,
        big_b,
        seed=selection_seed(state.seed, state.round),
    )
    chosen = state.active[local.indices]
    state.pending_ids = []
    for pool_idx in chosen:
        qid = f"r{state.round}-i{int(pool_idx)}"
        state.issued[qid] = int(pool_idx)
        state.pending_ids.append(qid)
    _append_event(
        state,
        {
            "event": "batch",
            "round": state.round,
            "query_ids": list(state.pending_ids),
            "pool_indices": [int(i) for i in chosen],
        },
    )
    return True


def create_app(
    pools: dict[str, QueryPool],
    log_dir: str,
    b: int = 10,
    big_b: int = 200,
    m: int = 1000,
    strategy: str = "successive_elimination",
    score_kind: str = "entropy",
    am: AdaptiveMetropolisConfig | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    """Build the service around preloaded pools; one event log per session."""
    os.makedirs(log_dir, exist_ok=True)
    defaults = {
        "b": b,
        "big_b": big_b,
        "m": m,
        "strategy": strategy,
        "score_kind": score_kind,
    }
    am = am or AdaptiveMetropolisConfig()
    envs = {
        name: make_env(pool.env_name, d=pool.d) for name, pool in pools.items()
    }
    app = FastAPI(title="prefbatch", version=PAYLOAD_VERSION)
    sessions: dict[str, _SessionState] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> _SessionState:
        with registry_lock:
            state = sessions.get(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return state

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest):
        pool = pools.get(request.env)
        if pool is None:
            raise HTTPException(
                status_code=404, detail=f"no pool for environment {request.env!r}"
            )
        cfg = dict(defaults)
        for key in defaults:
            value = getattr(request, key)
            if value is not None:
                cfg[key] = value
        if cfg["strategy"] not in STRATEGIES:
            raise HTTPException(status_code=422, detail="unknown strategy")
        if cfg["score_kind"] not in SCORE_KINDS:
            raise HTTPException(status_code=422, detail="unknown score kind")
        if not 1 <= cfg["b"] <= cfg["big_b"] <= pool.k:
            raise HTTPException(status_code=422, detail="need 1 <= b <= B <= K")
        seed = request.seed if request.seed is not None else 0

        session_id = uuid.uuid4().hex
        state = _SessionState(
            id=session_id,
            pool=pool,
            env=envs[request.env],
            b=cfg["b"],
            big_b=cfg["big_b"],
            m=cfg["m"],
            strategy=cfg["strategy"],
            score_kind=cfg["score_kind"],
            seed=seed,
            am=am,
            log_path=os.path.join(log_dir, f"{session_id}.jsonl"),
        )
        state.active = np.arange(pool.k)
        state.posterior = sample_posterior(
            [], d=pool.d, m=state.m, cfg=am, seed=posterior_seed(seed, 0)
        )
        state.w_hat = posterior_mean(state.posterior)
        _append_event(
            state,
            {
                "event": "create",
                "session_id": session_id,
                "config": _config_payload(state),
            },
        )
        _select_next_batch(state)
        with registry_lock:
            sessions[session_id] = state
        return {
            "v": PAYLOAD_VERSION,
            "session_id": session_id,
            "env": request.env,
            "env_info": _env_info(state.env),
            "config": _config_payload(state),
            "batch": _batch_payload(state),
        }

    @app.get("/sessions/{session_id}")
    def get_session_info(session_id: str):
        state = get_session(session_id)
        with state.lock:
            return {
                "v": PAYLOAD_VERSION,
                "session_id": state.id,
                "env": state.pool.env_name,
                "env_info": _env_info(state.env),
                "config": _config_payload(state),
                "round": state.round,
                "n_queries_answered": state.n_answered,
                "pending_query_ids": state.unanswered_pending(),
                "exhausted": state.exhausted,
            }

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        state = get_session(session_id)
        with state.lock:
            if state.exhausted:
                raise HTTPException(status_code=409, detail="pool exhausted")
            return _batch_payload(state)

    @app.post("/sessions/{session_id}/responses")
    def submit_response(session_id: str, request: SubmitResponseRequest):
        state = get_session(session_id)
        with state.lock:
            pool_index = state.issued.get(request.query_id)
            if pool_index is None:
                raise HTTPException(status_code=404, detail="unknown query id")
            if request.query_id in state.answered:
                raise HTTPException(
                    status_code=409, detail="query already answered"
                )
            label = +1 if request.choice == "A" else -1
            psi = state.pool.candidates[pool_index].psi
            _append_event(
                state,
                {
                    "event": "response",
                    "round": state.round,
                    "query_id": request.query_id,
                    "pool_index": pool_index,
                    "choice": request.choice,
                    "label": label,
                },
            )
            state.answered[request.query_id] = request.choice
            state.responses.append(Response(psi, label))

            remaining = len(state.unanswered_pending())
            if remaining > 0:
                return {
                    "v": PAYLOAD_VERSION,
                    "status": "recorded",
                    "remaining": remaining,
                }

            # Batch complete: one posterior update, then the next selection.
            batch_indices = [state.issued[qid] for qid in state.pending_ids]
            state.active = np.setdiff1d(state.active, np.array(batch_indices))
            state.round += 1
            state.posterior = sample_posterior(
                state.responses,
                d=state.pool.d,
                m=state.m,
                cfg=state.am,
                seed=posterior_seed(state.seed, state.round),
                initial_point=state.w_hat,
            )
            state.w_hat = posterior_mean(state.posterior)
            has_next = _select_next_batch(state)
            return {
                "v": PAYLOAD_VERSION,
                "status": "batch_complete",
                "posterior": _posterior_summary(state),
                "next_batch": _batch_payload(state) if has_next else None,
                "exhausted": state.exhausted,
            }

    @app.get("/sessions/{session_id}/posterior")
    def get_posterior(session_id: str):
        state = get_session(session_id)
        with state.lock:
            return _posterior_summary(state)

    @app.get("/sessions/{session_id}/queries/{query_id}/trajectories")
    def get_trajectories(session_id: str, query_id: str):
        state = get_session(session_id)
        with state.lock:
            pool_index = state.issued.get(query_id)
            if pool_index is None:
                raise HTTPException(status_code=404, detail="unknown query id")
            payload = _trajectory_payload(state, pool_index)
            return {
                "v": PAYLOAD_VERSION,
                "query_id": query_id,
                "env": state.pool.env_name,
                "pool_index": pool_index,
                **payload,
            }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def replay_event_log(log_path: str, pool: QueryPool) -> np.ndarray:
    """Recompute the final posterior mean from a session's event log.

    Uses the simulation loop's update path, so the result matches the live
    server's posterior mean bitwise.
    """
    create = None
    rounds: list[list[Response]] = []
    with open(log_path, "r", encoding="utf-8") as fh:
        for line in fh:
            event = json.loads(line)
            if event["event"] == "create":
                create = event["config"]
            elif event["event"] == "batch":
                rounds.append([])
            elif event["event"] == "response":
                psi = pool.candidates[event["pool_index"]].psi
                rounds[-1].append(Response(psi, event["label"]))
    if create is None:
        raise ValueError("event log has no create record")
    complete = [tuple(r) for r in rounds if len(r) == create["b"]]
    placeholder = OracleConfig(
        w_true=np.zeros(pool.d) + 1e-3, noisy=False, seed=0
    )
    cfg = ExperimentConfig(
        env_name=create["env"],
        k=create["k"],
        oracle=placeholder,
        b=create["b"],
        big_b=create["big_b"],
        m=create["m"],
        strategy=create["strategy"],
        score_kind=create["score_kind"],
        n_queries_total=len(complete) * create["b"],
        am=AdaptiveMetropolisConfig(**create["am"]),
        seed=create["seed"],
    )
    return replay_posterior_means(cfg, complete, pool.d)
