"""Batch selection strategies over a scored candidate pool.

All strategies except the random baseline preselect the top-B candidates by
score and then enforce diversity in feature-difference space.  Ties anywhere
resolve to the lowest pool index (pairs: lexicographically smallest), so
every strategy is bitwise deterministic for fixed inputs and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import hull_vertices, kmedoids, pairwise_distances

__all__ = [
    "STRATEGIES",
    "SelectedBatch",
    "select_greedy",
    "select_medoids",
    "select_boundary_medoids",
    "select_successive_elimination",
    "select_random",
    "select_batch",
]

STRATEGIES = (
    "greedy",
    "medoids",
    "boundary_medoids",
    "successive_elimination",
    "random",
)


@dataclass(frozen=True)
class SelectedBatch:
    """b distinct pool indices with their ranking scores.

    elimination_trace lists (removed index, kept index) pairs in elimination
    order; it is populated only by successive elimination.
    """

    indices: np.ndarray
    scores: np.ndarray
    strategy: str
    elimination_trace: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=int)
        if len(np.unique(indices)) != indices.size:
            raise ValueError("selected indices must be distinct")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))

    @property
    def b(self) -> int:
        return self.indices.size

    def to_json_dict(self) -> dict:
        trace = None
        if self.elimination_trace is not None:
            trace = [[r, k] for r, k in self.elimination_trace]
        return {
            "indices": self.indices.tolist(),
            "scores": self.scores.tolist(),
            "strategy": self.strategy,
            "elimination_trace": trace,
        }


def _descending_by_score(scores: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    # Sort by (score desc, index asc); lexsort's last key is primary.
    order = np.lexsort((candidates, -scores[candidates]))
    return candidates[order]


def select_greedy(scores: np.ndarray, b: int) -> np.ndarray:
    """Indices of the b largest scores, descending, ties to the lowest index."""
    scores = np.asarray(scores, dtype=float)
    if not 1 <= b <= scores.size:
        raise ValueError(f"b must be in [1, {scores.size}], got {b}")
    return _descending_by_score(scores, np.arange(scores.size))[:b]


def _preselect(pool_psi: np.ndarray, scores: np.ndarray, b: int, big_b: int):
    pool_psi = np.asarray(pool_psi, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if pool_psi.ndim != 2 or pool_psi.shape[0] != scores.size:
        raise ValueError("pool_psi rows and scores must align")
    if not 1 <= b <= big_b <= scores.size:
        raise ValueError(
            f"need 1 <= b <= B <= pool size, got b={b}, B={big_b}, "
            f"pool={scores.size}"
        )
    return pool_psi, scores, select_greedy(scores, big_b)


def select_medoids(
    pool_psi: np.ndarray, scores: np.ndarray, b: int, big_b: int, seed: int = 0
) -> SelectedBatch:
    """Cluster the top-B candidates into b groups; the medoids are the batch."""
    pool_psi, scores, top = _preselect(pool_psi, scores, b, big_b)
    result = kmedoids(pool_psi[top], k=b, seed=seed)
    chosen = _descending_by_score(scores, top[result.medoids])
    return SelectedBatch(chosen, scores[chosen], "medoids")


def select_boundary_medoids(
    pool_psi: np.ndarray, scores: np.ndarray, b: int, big_b: int, seed: int = 0
) -> SelectedBatch:
    """Medoid selection restricted to the hull vertices of the top-B set.

    When the hull has fewer than b vertices, the deficit is filled with the
    highest-scored preselected candidates not already chosen.
    """
    pool_psi, scores, top = _preselect(pool_psi, scores, b, big_b)
    boundary = np.array(hull_vertices(pool_psi[top]), dtype=int)
    if boundary.size >= b:
        result = kmedoids(pool_psi[top[boundary]], k=b, seed=seed)
        chosen = top[boundary[result.medoids]]
    else:
        chosen = top[boundary]
        taken = set(chosen.tolist())
        fill = np.array(
            [i for i in top if int(i) not in taken][: b - chosen.size], dtype=int
        )
        chosen = np.concatenate([chosen, fill])
    chosen = _descending_by_score(scores, chosen)
    return SelectedBatch(chosen, scores[chosen], "boundary_medoids")


def select_successive_elimination(
    pool_psi: np.ndarray, scores: np.ndarray, b: int, big_b: int, seed: int = 0
) -> SelectedBatch:
    """Repeatedly drop the lower-scored member of the closest remaining pair.

    Runs B - b eliminations over the top-B preselection.  Distance ties take
    the lexicographically smallest pool-index pair; score ties remove the
    higher index.  Coincident duplicates are therefore eliminated first.
    """
    pool_psi, scores, top = _preselect(pool_psi, scores, b, big_b)
    dist = pairwise_distances(pool_psi[top])
    pos_i, pos_j = np.triu_indices(top.size, k=1)
    pair_lo = np.minimum(top[pos_i], top[pos_j])
    pair_hi = np.maximum(top[pos_i], top[pos_j])
    order = np.lexsort((pair_hi, pair_lo, dist[pos_i, pos_j]))

    alive = {int(i) for i in top}
    trace: list[tuple[int, int]] = []
    # Eliminations only delete points, so the live minimum-distance pair
    # always lies forward of the last visited pair; one pass suffices.
    for idx in order:
        if len(alive) <= b:
            break
        lo, hi = int(pair_lo[idx]), int(pair_hi[idx])
        if lo not in alive or hi not in alive:
            continue
        if scores[lo] < scores[hi]:
            removed, kept = lo, hi
        else:
            # Covers both the lower-score and the tie case: drop the higher
            # index on equal scores.
            removed, kept = hi, lo
        alive.remove(removed)
        trace.append((removed, kept))
    survivors = np.array([i for i in top if int(i) in alive], dtype=int)
    return SelectedBatch(
        survivors,
        scores[survivors],
        "successive_elimination",
        elimination_trace=tuple(trace),
    )


def select_random(pool_size: int, b: int, seed: int = 0) -> np.ndarray:
    """b distinct indices drawn uniformly without replacement."""
    if not 1 <= b <= pool_size:
        raise ValueError(f"b must be in [1, {pool_size}], got {b}")
    rng = np.random.default_rng(seed)
    return rng.choice(pool_size, size=b, replace=False)


def select_batch(
    strategy: str,
    pool_psi: np.ndarray,
    scores: np.ndarray,
    b: int,
    big_b: int,
    seed: int = 0,
) -> SelectedBatch:
    """Dispatch to the named strategy; scores are the configured ranking score."""
    scores = np.asarray(scores, dtype=float)
    if strategy == "greedy":
        chosen = select_greedy(scores, b)
        return SelectedBatch(chosen, scores[chosen], "greedy")
    if strategy == "medoids":
        return select_medoids(pool_psi, scores, b, big_b, seed)
    if strategy == "boundary_medoids":
        return select_boundary_medoids(pool_psi, scores, b, big_b, seed)
    if strategy == "successive_elimination":
        return select_successive_elimination(pool_psi, scores, b, big_b, seed)
    if strategy == "random":
        chosen = select_random(scores.size, b, seed)
        return SelectedBatch(chosen, scores[chosen], "random")
    raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
