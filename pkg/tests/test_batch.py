"""Tests for the batch selection strategies."""

import numpy as np
import pytest

from prefbatch.batch import (
    STRATEGIES,
    SelectedBatch,
    select_batch,
    select_boundary_medoids,
    select_greedy,
    select_medoids,
    select_random,
    select_successive_elimination,
)


class TestGreedy:
    def test_top_three(self):
        np.testing.assert_array_equal(
            select_greedy(np.array([0.9, 0.8, 0.7, 0.1]), 3), [0, 1, 2]
        )

    def test_all_equal_takes_lowest_indices(self):
        np.testing.assert_array_equal(
            select_greedy(np.array([0.5, 0.5, 0.5]), 2), [0, 1]
        )

    def test_tie_among_maxima(self):
        np.testing.assert_array_equal(
            select_greedy(np.array([0.1, 0.9, 0.9]), 2), [1, 2]
        )

    def test_output_descends_by_score(self):
        out = select_greedy(np.array([0.2, 0.9, 0.5, 0.7]), 3)
        np.testing.assert_array_equal(out, [1, 3, 2])

    def test_oversized_b_rejected(self):
        with pytest.raises(ValueError):
            select_greedy(np.array([1.0, 2.0]), 3)


class TestMedoids:
    def test_equal_b_and_big_b_reduces_to_greedy(self):
        rng = np.random.default_rng(0)
        psi = rng.uniform(-1, 1, (30, 3))
        scores = rng.random(30)
        batch = select_medoids(psi, scores, b=5, big_b=5)
        np.testing.assert_array_equal(
            np.sort(batch.indices), np.sort(select_greedy(scores, 5))
        )

    def test_line_clusters(self):
        psi = np.array([[0.0], [1.0], [10.0], [11.0]])
        scores = np.full(4, 0.5)
        batch = select_medoids(psi, scores, b=2, big_b=4)
        np.testing.assert_array_equal(np.sort(batch.indices), [0, 2])

    def test_single_cluster_middle_point(self):
        psi = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        batch = select_medoids(psi, np.full(3, 1.0), b=1, big_b=3)
        np.testing.assert_array_equal(batch.indices, [1])


class TestBoundaryMedoids:
    def test_square_corners_exclude_center(self):
        psi = np.array(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]
        )
        batch = select_boundary_medoids(psi, np.full(5, 1.0), b=4, big_b=5)
        np.testing.assert_array_equal(np.sort(batch.indices), [0, 1, 2, 3])

    def test_deficit_filled_by_score(self):
        # Three distinct collinear points have two hull vertices; b=3 forces
        # the interior point back in.
        psi = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        scores = np.array([0.5, 0.9, 0.7])
        batch = select_boundary_medoids(psi, scores, b=3, big_b=3)
        np.testing.assert_array_equal(np.sort(batch.indices), [0, 1, 2])

    def test_single_medoid_on_symmetric_square(self):
        psi = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        batch = select_boundary_medoids(psi, np.full(4, 1.0), b=1, big_b=4)
        np.testing.assert_array_equal(batch.indices, [0])


class TestSuccessiveElimination:
    def test_line_trace(self):
        psi = np.array([[0.0], [1.0], [2.0]])
        scores = np.array([0.5, 0.9, 0.4])
        batch = select_successive_elimination(psi, scores, b=2, big_b=3)
        np.testing.assert_array_equal(batch.indices, [1, 2])
        assert batch.elimination_trace == ((0, 1),)

    def test_no_elimination_when_b_equals_big_b(self):
        rng = np.random.default_rng(1)
        psi = rng.uniform(-1, 1, (20, 2))
        scores = rng.random(20)
        batch = select_successive_elimination(psi, scores, b=4, big_b=4)
        np.testing.assert_array_equal(batch.indices, select_greedy(scores, 4))
        assert batch.elimination_trace == ()

    def test_coincident_pair_eliminated_first(self):
        psi = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
        scores = np.array([0.3, 0.8, 0.1])
        batch = select_successive_elimination(psi, scores, b=2, big_b=3)
        assert batch.elimination_trace[0] == (0, 1)
        np.testing.assert_array_equal(np.sort(batch.indices), [1, 2])

    def test_score_tie_removes_higher_index(self):
        psi = np.array([[0.0], [0.1], [9.0]])
        scores = np.array([0.7, 0.7, 0.1])
        batch = select_successive_elimination(psi, scores, b=2, big_b=3)
        assert batch.elimination_trace == ((1, 0),)

    def test_trace_length_is_eliminations(self):
        rng = np.random.default_rng(2)
        psi = rng.uniform(-1, 1, (50, 3))
        scores = rng.random(50)
        batch = select_successive_elimination(psi, scores, b=5, big_b=30)
        assert len(batch.elimination_trace) == 25
        assert batch.b == 5


class TestRandom:
    def test_full_pool(self):
        np.testing.assert_array_equal(
            np.sort(select_random(4, 4, seed=3)), [0, 1, 2, 3]
        )

    def test_deterministic(self):
        np.testing.assert_array_equal(
            select_random(100, 10, seed=5), select_random(100, 10, seed=5)
        )

    def test_uniform_frequencies(self):
        counts = np.zeros(4)
        for i in range(10_000):
            counts[select_random(4, 1, seed=i)[0]] += 1
        freq = counts / 10_000
        sigma = np.sqrt(0.25 * 0.75 / 10_000)
        assert np.all(np.abs(freq - 0.25) <= 3 * sigma)


class TestSelectBatch:
    def test_dispatches_every_strategy(self):
        rng = np.random.default_rng(4)
        psi = rng.uniform(-1, 1, (60, 3))
        scores = rng.random(60)
        for strategy in STRATEGIES:
            batch = select_batch(strategy, psi, scores, b=5, big_b=20, seed=9)
            assert batch.strategy == strategy
            assert batch.b == 5
            assert len(np.unique(batch.indices)) == 5

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            select_batch("pick-best", np.zeros((3, 1)), np.zeros(3), 1, 2)

    def test_non_random_strategies_select_from_preselection(self):
        rng = np.random.default_rng(6)
        psi = rng.uniform(-1, 1, (80, 2))
        scores = rng.random(80)
        top = set(select_greedy(scores, 20).tolist())
        for strategy in ("greedy", "medoids", "boundary_medoids",
                         "successive_elimination"):
            batch = select_batch(strategy, psi, scores, b=6, big_b=20, seed=0)
            assert set(batch.indices.tolist()) <= top

    def test_top_scorer_always_survives(self):
        # The highest-scored pool candidate must appear in every greedy and
        # successive-elimination batch.
        rng = np.random.default_rng(7)
        for _ in range(200):
            d = int(rng.integers(2, 5))
            psi = rng.uniform(-2, 2, (100, d))
            scores = rng.random(100)
            best = int(np.argmax(scores))
            for strategy in ("greedy", "successive_elimination"):
                batch = select_batch(strategy, psi, scores, b=5, big_b=40, seed=1)
                assert best in batch.indices

    def test_elimination_spreads_batches(self):
        # Diversity check: the closest pair inside a successive-elimination
        # batch is, on average, farther apart than inside a greedy batch.
        rng = np.random.default_rng(8)
        gaps_greedy, gaps_se = [], []
        for _ in range(100):
            psi = rng.uniform(-1, 1, (60, 3))
            scores = rng.random(60)
            for strategy, sink in (("greedy", gaps_greedy),
                                   ("successive_elimination", gaps_se)):
                batch = select_batch(strategy, psi, scores, b=5, big_b=25)
                sub = psi[batch.indices]
                diff = sub[:, None, :] - sub[None, :, :]
                dist = np.sqrt((diff**2).sum(-1))
                sink.append(dist[np.triu_indices(5, k=1)].min())
        assert np.mean(gaps_se) > np.mean(gaps_greedy)

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError):
            SelectedBatch(np.array([1, 1]), np.array([0.5, 0.5]), "greedy")

    def test_json_dict_round_trip_fields(self):
        batch = select_successive_elimination(
            np.array([[0.0], [1.0], [2.0]]),
            np.array([0.5, 0.9, 0.4]),
            b=2,
            big_b=3,
        )
        record = batch.to_json_dict()
        assert record["indices"] == [1, 2]
        assert record["strategy"] == "successive_elimination"
        assert record["elimination_trace"] == [[0, 1]]
