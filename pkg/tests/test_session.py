"""Session loop, alignment metric, signed-rank test, comparisons, and logs."""

import csv
import itertools
import json
import math

import numpy as np
import pytest
import scipy.stats

from prefbatch.belief import AdaptiveMetropolisConfig, posterior_mean
from prefbatch.envs import make_env, sample_pool
from prefbatch.oracle import Oracle, OracleConfig, sample_w_true
from prefbatch.session import (
    ComparisonResult,
    ExperimentConfig,
    SessionError,
    alignment,
    compare_methods,
    derive_seed,
    load_session_log,
    replay_posterior_means,
    run_session,
    save_session_log,
    wilcoxon_one_sided,
    write_comparison_csv,
    write_p_value_json,
)

# Short chain for loop tests: (700 - 100) / 6 = 100 retained samples.
FAST_AM = AdaptiveMetropolisConfig(
    total_steps=700, burn_in=100, thinning=6, adaptation_start=200
)


@pytest.fixture(scope="module")
def lds_pool():
    return sample_pool(make_env("lds", d=3), k=60, seed=9)


def tiny_config(strategy="greedy", **overrides):
    base = dict(
        env_name="lds",
        k=60,
        oracle=OracleConfig(w_true=sample_w_true(3, 5), noisy=False, seed=21),
        b=2,
        big_b=12,
        m=100,
        strategy=strategy,
        score_kind="entropy",
        n_queries_total=6,
        am=FAST_AM,
        seed=77,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestAlignment:
    def test_equal_vectors_align_perfectly(self):
        w = np.array([0.3, -0.4, 0.1])
        assert alignment(w, w) == pytest.approx(1.0)

    def test_orthogonal_vectors_score_zero(self):
        assert alignment(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(
            0.0
        )

    def test_opposite_vectors_score_minus_one(self):
        w = np.array([0.2, 0.5])
        assert alignment(w, -3.0 * w) == pytest.approx(-1.0)

    def test_scale_invariant(self):
        a = np.array([0.3, 0.1, -0.2])
        b = np.array([-0.1, 0.4, 0.2])
        assert alignment(a, b) == pytest.approx(alignment(5 * a, 0.01 * b))

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            alignment(np.zeros(3), np.ones(3))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            alignment(np.ones(3), np.ones(4))


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, 1, 3) == derive_seed(7, 1, 3)

    def test_streams_and_indices_separate(self):
        seeds = {
            derive_seed(base, stream, index)
            for base in (0, 1)
            for stream in range(5)
            for index in range(4)
        }
        assert len(seeds) == 2 * 5 * 4


class TestConfigValidation:
    def test_batch_larger_than_preselection_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(b=20, big_b=12)

    def test_total_not_multiple_of_batch_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(n_queries_total=5)

    def test_total_beyond_pool_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(n_queries_total=62, k=60)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(strategy="simulated_annealing")

    def test_unknown_score_kind_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(score_kind="bald")

    def test_json_round_trip(self):
        cfg = tiny_config(strategy="medoids", seed=13)
        back = ExperimentConfig.from_json_dict(cfg.to_json_dict())
        assert back.to_json_dict() == cfg.to_json_dict()


def brute_force_upper_tail(diffs):
    # Enumerates all sign assignments of the nonzero differences.
    diffs = np.asarray(diffs, dtype=float)
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return 1.0
    ranks = scipy.stats.rankdata(np.abs(diffs))
    observed = ranks[diffs > 0.0].sum()
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        w_plus = sum(r for r, s in zip(ranks, signs) if s)
        if w_plus >= observed - 1e-9:
            hits += 1
    return hits / 2.0**n


class TestWilcoxon:
    def test_all_positive_ten_pairs(self):
        y = np.zeros(10)
        x = np.arange(1.0, 11.0)
        assert wilcoxon_one_sided(x, y) == pytest.approx(1.0 / 1024.0, abs=1e-15)

    def test_all_negative_ten_pairs(self):
        x = np.zeros(10)
        y = np.arange(1.0, 11.0)
        assert wilcoxon_one_sided(x, y) == pytest.approx(1.0)

    def test_identical_samples_uninformative(self):
        x = np.array([0.4, 0.2, -0.1, 0.9])
        assert wilcoxon_one_sided(x, x) == 1.0

    def test_matches_reference_exact_test_without_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(4, 16))
            diffs = rng.standard_normal(n)
            ours = wilcoxon_one_sided(diffs, np.zeros(n))
            ref = scipy.stats.wilcoxon(
                diffs, alternative="greater", method="exact"
            ).pvalue
            assert ours == pytest.approx(ref, abs=1e-12)

    def test_matches_enumeration_with_ties(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(3, 11))
            diffs = rng.integers(-3, 4, size=n).astype(float)
            assert wilcoxon_one_sided(diffs, np.zeros(n)) == pytest.approx(
                brute_force_upper_tail(diffs), abs=1e-12
            )

    def test_normal_approximation_near_exact_at_cutover(self):
        from prefbatch.session import _exact_upper_tail_p

        rng = np.random.default_rng(5)
        for _ in range(5):
            diffs = rng.standard_normal(40)
            diffs = diffs[diffs != 0.0]
            ranks = scipy.stats.rankdata(np.abs(diffs))
            w_plus = float(ranks[diffs > 0.0].sum())
            exact = _exact_upper_tail_p(w_plus, ranks)
            approx = wilcoxon_one_sided(diffs, np.zeros_like(diffs))
            assert approx == pytest.approx(exact, abs=0.01)

    def test_empty_input_uninformative(self):
        assert wilcoxon_one_sided(np.array([]), np.array([])) == 1.0


class TestRunSession:
    def test_loop_shape_and_bookkeeping(self, lds_pool):
        cfg = tiny_config()
        log = run_session(cfg, lds_pool)
        assert not log.incomplete
        assert log.version == "v1"
        assert len(log.iterations) == 3
        for r, it in enumerate(log.iterations):
            assert it.batch_index == r
            assert it.selected.indices.size == cfg.b
            assert len(it.responses) == cfg.b
            assert len(it.query_scores) == cfg.b
            assert -1.0 <= it.alignment <= 1.0
            assert it.wall_times.per_query_s > 0.0
            assert it.wall_times.per_query_s == pytest.approx(
                (
                    it.wall_times.scoring_s
                    + it.wall_times.selection_s
                    + it.wall_times.sampling_s
                )
                / cfg.b
            )

    def test_queried_candidates_never_repeat(self, lds_pool):
        log = run_session(tiny_config(strategy="random"), lds_pool)
        seen = np.concatenate([it.selected.indices for it in log.iterations])
        assert len(np.unique(seen)) == seen.size

    def test_noiseless_responses_follow_true_margin(self, lds_pool):
        cfg = tiny_config()
        log = run_session(cfg, lds_pool)
        w = cfg.oracle.w_true
        for it in log.iterations:
            for idx, resp in zip(it.selected.indices, it.responses):
                assert np.array_equal(resp.psi, lds_pool.candidates[int(idx)].psi)
                expected = +1 if w @ resp.psi >= 0.0 else -1
                assert resp.label == expected

    def test_deterministic_replay_of_full_run(self, lds_pool):
        cfg = tiny_config(strategy="successive_elimination")
        first = run_session(cfg, lds_pool)
        second = run_session(cfg, lds_pool)
        assert np.array_equal(first.final_w_hat, second.final_w_hat)
        assert [it.alignment for it in first.iterations] == [
            it.alignment for it in second.iterations
        ]

    def test_stored_responses_replay_to_same_estimate(self, lds_pool):
        cfg = tiny_config(strategy="medoids")
        log = run_session(cfg, lds_pool)
        replayed = replay_posterior_means(
            cfg, [it.responses for it in log.iterations], lds_pool.d
        )
        assert np.array_equal(replayed, log.final_w_hat)

    def test_zero_query_session_returns_prior_estimate(self, lds_pool):
        cfg = tiny_config(n_queries_total=0)
        log = run_session(cfg, lds_pool)
        assert log.iterations == ()
        assert np.linalg.norm(log.final_w_hat) < 1.0

    def test_pool_mismatch_rejected(self, lds_pool):
        with pytest.raises(ValueError):
            run_session(tiny_config(env_name="driver"), lds_pool)
        with pytest.raises(ValueError):
            run_session(tiny_config(k=50, n_queries_total=6), lds_pool)

    def test_oracle_dimension_mismatch_rejected(self, lds_pool):
        cfg = tiny_config(
            oracle=OracleConfig(w_true=sample_w_true(5, 0), noisy=False, seed=0)
        )
        with pytest.raises(ValueError):
            run_session(cfg, lds_pool)

    def test_mid_round_failure_carries_partial_log(self, lds_pool, monkeypatch):
        cfg = tiny_config()
        original = Oracle.respond
        calls = {"n": 0}

        def flaky(self, psi):
            if calls["n"] >= 3:
                raise RuntimeError("respondent went home")
            calls["n"] += 1
            return original(self, psi)

        monkeypatch.setattr(Oracle, "respond", flaky)
        with pytest.raises(SessionError) as excinfo:
            run_session(cfg, lds_pool)
        partial = excinfo.value.partial_log
        assert partial.incomplete
        assert len(partial.iterations) == 1
        assert isinstance(excinfo.value.__cause__, RuntimeError)


class TestSessionLogIO:
    def test_round_trip_preserves_everything(self, lds_pool, tmp_path):
        log = run_session(tiny_config(strategy="successive_elimination"), lds_pool)
        path = str(tmp_path / "session.jsonl")
        save_session_log(log, path)
        back = load_session_log(path)
        assert back.version == log.version
        assert back.incomplete == log.incomplete
        assert back.config.to_json_dict() == log.config.to_json_dict()
        assert np.array_equal(back.final_w_hat, log.final_w_hat)
        assert len(back.iterations) == len(log.iterations)
        for a, b in zip(back.iterations, log.iterations):
            assert a.batch_index == b.batch_index
            assert np.array_equal(a.selected.indices, b.selected.indices)
            assert np.array_equal(a.selected.scores, b.selected.scores)
            assert a.selected.elimination_trace == b.selected.elimination_trace
            assert a.query_scores == b.query_scores
            assert a.alignment == b.alignment
            assert a.wall_times == b.wall_times
            for ra, rb in zip(a.responses, b.responses):
                assert ra.label == rb.label
                assert np.array_equal(ra.psi, rb.psi)


class TestCompareMethods:
    def test_requires_five_runs(self, lds_pool):
        with pytest.raises(ValueError):
            compare_methods([tiny_config()], lds_pool, runs=4)

    def test_rejects_mixed_settings(self, lds_pool):
        cfgs = [tiny_config("greedy"), tiny_config("random", b=3, n_queries_total=6)]
        with pytest.raises(ValueError):
            compare_methods(cfgs, lds_pool, runs=5)

    def test_rejects_duplicate_strategies(self, lds_pool):
        with pytest.raises(ValueError):
            compare_methods([tiny_config(), tiny_config()], lds_pool, runs=5)

    def test_paired_comparison_output_shape(self, lds_pool):
        cfgs = [
            tiny_config("greedy", n_queries_total=4),
            tiny_config("random", n_queries_total=4),
        ]
        result = compare_methods(cfgs, lds_pool, runs=5)
        assert result.strategies == ("greedy", "random")
        assert len(result.rows) == 2 * 5 * 2
        for strategy in result.strategies:
            assert len(result.final_m[strategy]) == 5
            assert result.mean_trajectories[strategy].shape == (2,)
            assert result.p_values[strategy][strategy] == 1.0
        for si in result.strategies:
            for sj in result.strategies:
                assert 0.0 < result.p_values[si][sj] <= 1.0

    def test_rows_deterministic_except_timing(self, lds_pool):
        cfgs = [
            tiny_config("greedy", n_queries_total=4),
            tiny_config("random", n_queries_total=4),
        ]
        a = compare_methods(cfgs, lds_pool, runs=5)
        b = compare_methods(cfgs, lds_pool, runs=5)
        assert [row[:5] for row in a.rows] == [row[:5] for row in b.rows]
        assert a.p_values == b.p_values


@pytest.fixture(scope="module")
def result(lds_pool):
    cfgs = [
        tiny_config("greedy", n_queries_total=4),
        tiny_config("random", n_queries_total=4),
    ]
    return compare_methods(cfgs, lds_pool, runs=5)


class TestWriters:
    def test_csv_layout(self, result, tmp_path):
        path = str(tmp_path / "comparison.csv")
        write_comparison_csv(result, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "strategy",
            "run",
            "round",
            "n_queries",
            "m",
            "per_query_seconds",
        ]
        assert len(rows) == 1 + len(result.rows)
        for row in rows[1:]:
            assert row[0] in result.strategies
            assert -1.0 <= float(row[4]) <= 1.0

    def test_p_value_json(self, result, tmp_path):
        path = str(tmp_path / "p_values.json")
        write_p_value_json(result, path)
        with open(path) as fh:
            record = json.load(fh)
        assert record["strategies"] == list(result.strategies)
        for si in result.strategies:
            assert record["p_values"][si][si] == 1.0
