"""Diversity primitives over feature-difference space.

Pairwise Euclidean distances, k-medoids clustering by Voronoi iteration, and
convex-hull vertex identification via a per-point linear feasibility test.
Instances stay small (a few hundred points), so quadratic scans and dense
tableaus are deliberate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "KMedoidsResult",
    "pairwise_distances",
    "kmedoids",
    "hull_vertices",
]

_KMEDOIDS_MAX_ITER = 100
_EXACT_ENUMERATION_CAP = 1000
_SIMPLEX_TOL = 1e-9


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty (N, d) array")
    return pts


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Symmetric N x N Euclidean distance matrix with an exact zero diagonal.

    Computed from coordinate differences, not the expanded quadratic form, so
    duplicate rows give exactly zero.
    """
    pts = _as_points(points)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True)
class KMedoidsResult:
    """Clustering outcome; medoids are sorted point indices.

    labels[i] is the position of point i's medoid within `medoids`.
    objective_trace records the within-cluster distance sum after each
    medoid-update step and never increases.
    """

    medoids: np.ndarray
    labels: np.ndarray
    objective: float
    n_iter: int
    objective_trace: tuple[float, ...]


def _farthest_first(dist: np.ndarray, points: np.ndarray, k: int) -> list[int]:
    centroid = points.mean(axis=0)
    from_centroid = np.linalg.norm(points - centroid, axis=1)
    chosen = [int(np.flatnonzero(from_centroid == from_centroid.max())[0])]
    while len(chosen) < k:
        nearest = dist[:, chosen].min(axis=1)
        nearest[chosen] = -np.inf
        chosen.append(int(np.flatnonzero(nearest == nearest.max())[0]))
    return sorted(chosen)


def _exact_medoids(dist: np.ndarray, n: int, k: int) -> list[int]:
    # Lexicographic enumeration order makes the lowest-index set win ties.
    best_obj = np.inf
    best: tuple[int, ...] = ()
    for medoid_set in combinations(range(n), k):
        obj = dist[:, medoid_set].min(axis=1).sum()
        if obj < best_obj - 1e-15:
            best_obj = obj
            best = medoid_set
    return list(best)


def kmedoids(points: np.ndarray, k: int, seed: int = 0) -> KMedoidsResult:
    """Cluster points into k groups around member medoids.

    Voronoi iteration: assign every point to its nearest medoid, then move
    each medoid to the member minimizing the summed distance to its cluster.
    Instances with at most 1000 candidate medoid sets are instead solved by
    exhaustive enumeration; the optimum is itself a fixed point of the
    iteration, and the iteration alone can land more than 10% off it.
    Initialization is deterministic (farthest-first from the centroid), so
    `seed` is accepted only for interface stability.  All ties resolve to the
    lowest index.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    dist = pairwise_distances(pts)
    if math.comb(n, k) <= _EXACT_ENUMERATION_CAP:
        medoid_arr = np.array(_exact_medoids(dist, n, k), dtype=int)
        labels = np.argmin(dist[:, medoid_arr], axis=1)
        objective = float(dist[np.arange(n), medoid_arr[labels]].sum())
        return KMedoidsResult(
            medoids=medoid_arr,
            labels=labels,
            objective=objective,
            n_iter=0,
            objective_trace=(objective,),
        )
    medoids = _farthest_first(dist, pts, k)
    trace: list[float] = []
    n_iter = 0
    for _ in range(_KMEDOIDS_MAX_ITER):
        n_iter += 1
        # Medoid list is kept sorted, so argmin's first-occurrence rule
        # resolves assignment ties to the lowest medoid index.
        labels = np.argmin(dist[:, medoids], axis=1)
        new_medoids: list[int] = []
        objective = 0.0
        for pos, medoid in enumerate(medoids):
            members = np.flatnonzero(labels == pos)
            if members.size == 0:
                # A medoid coincident with a lower-indexed one loses all its
                # points to the tie-break; keep it rather than vanish.
                new_medoids.append(medoid)
                continue
            sums = dist[np.ix_(members, members)].sum(axis=1)
            best = int(members[np.flatnonzero(sums == sums.min())[0]])
            new_medoids.append(best)
            objective += float(sums.min())
        new_medoids = sorted(new_medoids)
        trace.append(objective)
        if new_medoids == medoids:
            break
        medoids = new_medoids
    medoid_arr = np.array(medoids, dtype=int)
    labels = np.argmin(dist[:, medoid_arr], axis=1)
    objective = float(dist[np.arange(n), medoid_arr[labels]].sum())
    return KMedoidsResult(
        medoids=medoid_arr,
        labels=labels,
        objective=objective,
        n_iter=n_iter,
        objective_trace=tuple(trace),
    )


def _feasible_convex_combination(target: np.ndarray, others: np.ndarray) -> bool:
    """Phase-I simplex: does some lambda >= 0 with sum 1 combine others into target?

    Minimizes the sum of artificial variables over the standard-form system
    [coords; ones] @ lambda = [target; 1] with Bland's rule, so it cannot
    cycle; feasible iff the artificial sum reaches zero within tolerance.
    """
    n, d = others.shape
    if n == 0:
        return False
    rows = d + 1
    a = np.vstack([others.T, np.ones((1, n))])
    b = np.append(target, 1.0)
    flip = b < 0.0
    a[flip] *= -1.0
    b[flip] *= -1.0

    cols = n + rows
    tableau = np.zeros((rows + 1, cols + 1))
    tableau[:rows, :n] = a
    tableau[:rows, n:cols] = np.eye(rows)
    tableau[:rows, -1] = b
    tableau[rows, :n] = -a.sum(axis=0)
    tableau[rows, -1] = -b.sum()
    basis = list(range(n, cols))

    for _ in range(200 * cols):
        negative = np.flatnonzero(tableau[rows, :cols] < -_SIMPLEX_TOL)
        if negative.size == 0:
            break
        enter = int(negative[0])
        column = tableau[:rows, enter]
        leave = -1
        best_ratio = np.inf
        for i in range(rows):
            if column[i] > _SIMPLEX_TOL:
                ratio = tableau[i, -1] / column[i]
                if ratio < best_ratio - 1e-15 or (
                    abs(ratio - best_ratio) <= 1e-15
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    leave = i
                    best_ratio = ratio
        if leave < 0:
            break
        pivot_row = tableau[leave] / tableau[leave, enter]
        multipliers = tableau[:, enter].copy()
        tableau -= np.outer(multipliers, pivot_row)
        tableau[leave] = pivot_row
        basis[leave] = enter
    return tableau[rows, -1] >= -_SIMPLEX_TOL


def hull_vertices(points: np.ndarray) -> list[int]:
    """Indices of the extreme points of the convex hull, sorted ascending.

    A point is a vertex iff it is not a convex combination of the other
    points.  Exact duplicates are collapsed first; only the lowest index of
    a duplicate group can be returned.  Valid in any dimension, including
    affinely degenerate sets.
    """
    pts = _as_points(points)
    seen: dict[bytes, int] = {}
    representatives: list[int] = []
    for i, row in enumerate(pts):
        key = row.tobytes()
        if key not in seen:
            seen[key] = i
            representatives.append(i)
    unique = pts[representatives]
    if len(representatives) == 1:
        return [representatives[0]]
    vertices = []
    mask = np.ones(len(representatives), dtype=bool)
    for j, original in enumerate(representatives):
        mask[j] = False
        if not _feasible_convex_combination(unique[j], unique[mask]):
            vertices.append(original)
        mask[j] = True
    return vertices
