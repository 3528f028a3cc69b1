"""Command-line front end: pool generation, simulations, comparisons, serving.

Exit codes: 0 on success, 2 on usage or validation errors (including bad
flags, unknown environments, and malformed inputs), 1 on internal failures.
The PREF_SEED environment variable supplies the seed wherever --seed is
omitted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .acquisition import SCORE_KINDS
from .batch import STRATEGIES
from .envs import ENV_NAMES, atomic_write_text, load_pool, make_env, sample_pool, save_pool
from .session import (
    ComparisonResult,
    ExperimentConfig,
    SessionError,
    SessionLog,
    compare_methods,
    load_session_log,
    paired_oracle_config,
    run_session,
    save_session_log,
    wilcoxon_one_sided,
    write_comparison_csv,
    write_p_value_json,
)

__all__ = ["main", "build_parser"]


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    fallback = os.environ.get("PREF_SEED")
    if fallback is None:
        return 0
    try:
        return int(fallback)
    except ValueError:
        raise ValueError(f"PREF_SEED must be an integer, got {fallback!r}")


def _normalize_strategy(name: str) -> str:
    strategy = name.replace("-", "_")
    if strategy not in STRATEGIES:
        raise ValueError(
            f"unknown strategy {name!r}, expected one of "
            + ", ".join(STRATEGIES)
        )
    return strategy


def cmd_pool(args: argparse.Namespace) -> int:
    env = make_env(args.env, d=args.dim)
    started = time.perf_counter()
    pool = sample_pool(env, k=args.k, seed=_resolve_seed(args.seed))
    save_pool(pool, args.out)
    elapsed = time.perf_counter() - started
    print(f"K={pool.k} d={pool.d} elapsed={elapsed:.2f}s -> {args.out}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    pool = load_pool(args.pool)
    seed = _resolve_seed(args.seed)
    cfg = ExperimentConfig(
        env_name=pool.env_name,
        k=pool.k,
        oracle=paired_oracle_config(seed, 0, pool.d, noisy=not args.noiseless),
        b=args.b,
        big_b=args.big_b,
        m=args.m,
        strategy=_normalize_strategy(args.strategy),
        score_kind=args.score_kind,
        n_queries_total=args.n,
        seed=seed,
    )
    try:
        log = run_session(cfg, pool)
    except SessionError as exc:
        save_session_log(exc.partial_log, args.out)
        raise RuntimeError(
            f"session aborted; partial log with "
            f"{len(exc.partial_log.iterations)} rounds saved to {args.out}"
        ) from exc
    save_session_log(log, args.out)
    final_m = log.iterations[-1].alignment if log.iterations else float("nan")
    per_query = (
        float(np.mean([it.wall_times.per_query_s for it in log.iterations]))
        if log.iterations
        else float("nan")
    )
    print(
        f"strategy={cfg.strategy} final_m={final_m:.4f} "
        f"mean_per_query_seconds={per_query:.4f} -> {args.out}"
    )
    return 0


def _comparison_from_logs(paths: list[str]) -> ComparisonResult:
    """Aggregate stored simulate logs into the comparison outputs.

    Logs pair across strategies by the config seed, so two strategies run
    with the same --seed sequence share their hidden preferences.
    """
    by_strategy: dict[str, list[SessionLog]] = {}
    shared_settings = set()
    for path in paths:
        log = load_session_log(path)
        if log.incomplete:
            raise ValueError(f"{path}: incomplete log cannot be compared")
        if not log.iterations:
            raise ValueError(f"{path}: log has no iterations")
        shared_settings.add(
            (log.config.env_name, log.config.b, log.config.n_queries_total)
        )
        by_strategy.setdefault(log.config.strategy, []).append(log)
    if len(shared_settings) > 1:
        raise ValueError("logs disagree on environment, b, or total queries")

    strategies = tuple(sorted(by_strategy))
    seed_sets = {}
    for strategy, logs in by_strategy.items():
        if len(logs) < 2:
            raise ValueError(f"need at least 2 logs per strategy ({strategy})")
        logs.sort(key=lambda log: log.config.seed)
        seed_sets[strategy] = [log.config.seed for log in logs]
    reference = seed_sets[strategies[0]]
    for strategy in strategies[1:]:
        if seed_sets[strategy] != reference:
            raise ValueError(
                "strategies must cover the same seeds to form matched pairs"
            )

    rows = []
    final_m = {s: [] for s in strategies}
    mean_trajectories = {}
    for strategy in strategies:
        curves = []
        for j, log in enumerate(by_strategy[strategy]):
            curve = [it.alignment for it in log.iterations]
            curves.append(curve)
            final_m[strategy].append(curve[-1])
            for it in log.iterations:
                rows.append(
                    (
                        strategy,
                        j,
                        it.batch_index,
                        (it.batch_index + 1) * log.config.b,
                        it.alignment,
                        it.wall_times.per_query_s,
                    )
                )
        lengths = {len(c) for c in curves}
        if len(lengths) != 1:
            raise ValueError(f"{strategy}: logs disagree on round count")
        mean_trajectories[strategy] = np.mean(np.array(curves), axis=0)

    p_values = {
        si: {
            sj: wilcoxon_one_sided(np.array(final_m[si]), np.array(final_m[sj]))
            for sj in strategies
        }
        for si in strategies
    }
    return ComparisonResult(
        strategies=strategies,
        rows=tuple(rows),
        final_m=final_m,
        mean_trajectories=mean_trajectories,
        p_values=p_values,
    )


def cmd_compare(args: argparse.Namespace) -> int:
    if bool(args.logs) == bool(args.pool):
        raise ValueError("pass either stored logs or --pool with --strategies")
    if args.logs:
        result = _comparison_from_logs(args.logs)
    else:
        pool = load_pool(args.pool)
        seed = _resolve_seed(args.seed)
        strategies = [_normalize_strategy(s) for s in args.strategies.split(",")]
        cfgs = [
            ExperimentConfig(
                env_name=pool.env_name,
                k=pool.k,
                oracle=paired_oracle_config(
                    seed, 0, pool.d, noisy=not args.noiseless
                ),
                b=args.b,
                big_b=args.big_b,
                m=args.m,
                strategy=strategy,
                score_kind=args.score_kind,
                n_queries_total=args.n,
                seed=seed,
            )
            for strategy in strategies
        ]
        result = compare_methods(cfgs, pool, runs=args.runs, jobs=args.jobs)
    write_comparison_csv(result, args.out_csv)
    write_p_value_json(result, args.out_p)
    for strategy in result.strategies:
        mean_final = float(np.mean(result.final_m[strategy]))
        print(f"{strategy}: mean final m = {mean_final:.4f}")
    print(f"rows -> {args.out_csv}; p-values -> {args.out_p}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    groups: dict[tuple[str, int], list[float]] = {}
    for path in args.logs:
        log = load_session_log(path)
        for it in log.iterations:
            key = (log.config.strategy, (it.batch_index + 1) * log.config.b)
            groups.setdefault(key, []).append(it.alignment)
    if not groups:
        raise ValueError("no iterations found in the given logs")
    lines = ["strategy,n_queries,mean_m,stderr_m,n_runs"]
    for (strategy, n_queries) in sorted(groups):
        values = groups[(strategy, n_queries)]
        n = len(values)
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        lines.append(f"{strategy},{n_queries},{mean:.6f},{stderr:.6f},{n}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"{len(lines) - 1} aggregate rows -> {args.out}")
    return 0


def _run_uvicorn(app, host: str, port: int) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port)


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import create_app

    pools = {}
    for path in args.pool:
        pool = load_pool(path)
        pools[pool.env_name] = pool
    if not pools:
        raise ValueError("at least one --pool is required")
    app = create_app(
        pools,
        log_dir=args.log_dir,
        b=args.b,
        big_b=args.big_b,
        m=args.m,
        strategy=_normalize_strategy(args.strategy),
        score_kind=args.score_kind,
        static_dir=args.static_dir,
    )
    print(f"serving {sorted(pools)} on {args.host}:{args.port}")
    _run_uvicorn(app, args.host, args.port)
    return 0


def _add_loop_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--b", type=int, default=10, help="queries per batch")
    parser.add_argument(
        "--big-b", type=int, default=200, help="preselection size B"
    )
    parser.add_argument(
        "--m", type=int, default=1000, help="posterior sample count M"
    )
    parser.add_argument(
        "--score-kind", choices=SCORE_KINDS, default="entropy",
        help="informativeness score used for ranking",
    )
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefbatch",
        description="Batch active preference learning over trajectory pools.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    pool = sub.add_parser("pool", help="generate a query candidate pool")
    pool.add_argument("--env", required=True, choices=ENV_NAMES)
    pool.add_argument(
        "--dim", type=int, default=4, help="feature dimension (lds only)"
    )
    pool.add_argument("--k", type=int, default=10_000, help="pool size K")
    pool.add_argument("--seed", type=int, default=None)
    pool.add_argument("--out", required=True)
    pool.set_defaults(func=cmd_pool)

    simulate = sub.add_parser(
        "simulate", help="run one simulated preference-learning session"
    )
    simulate.add_argument("--pool", required=True, help="pool file from 'pool'")
    simulate.add_argument("--strategy", default="successive_elimination")
    simulate.add_argument("--n", type=int, default=150, help="total queries N")
    simulate.add_argument(
        "--noiseless", action="store_true",
        help="answer by exact sign instead of the noisy preference model",
    )
    _add_loop_flags(simulate)
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=cmd_simulate)

    compare = sub.add_parser(
        "compare",
        help="compare strategies, from stored logs or by running them fresh",
    )
    compare.add_argument("logs", nargs="*", help="session logs to aggregate")
    compare.add_argument("--pool", help="pool file for fresh-run mode")
    compare.add_argument(
        "--strategies", default="successive_elimination,random",
        help="comma-separated strategies for fresh-run mode",
    )
    compare.add_argument("--runs", type=int, default=10)
    compare.add_argument(
        "--jobs", type=int, default=1, help="concurrent runs in fresh-run mode"
    )
    compare.add_argument("--n", type=int, default=150)
    compare.add_argument("--noiseless", action="store_true")
    _add_loop_flags(compare)
    compare.add_argument("--out-csv", required=True)
    compare.add_argument("--out-p", required=True)
    compare.set_defaults(func=cmd_compare)

    report = sub.add_parser(
        "report", help="aggregate logs into plot-ready mean/stderr rows"
    )
    report.add_argument("logs", nargs="+")
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="launch the interactive session server")
    serve.add_argument(
        "--pool", action="append", default=[], help="pool file (repeatable)"
    )
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--strategy", default="successive_elimination")
    serve.add_argument("--log-dir", default="./sessions")
    serve.add_argument(
        "--static-dir", default=None, help="optional built web UI to mount at /"
    )
    _add_loop_flags(serve)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
