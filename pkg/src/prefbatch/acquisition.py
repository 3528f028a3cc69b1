"""Informativeness scores for query candidates against the current posterior.

Two objectives are computed for every candidate: the expected binary entropy
of the answer (in bits) and the volume-removal value min(p, 1 - p) where p is
the posterior-mean probability of a +1 answer.  Both use the exact softmax
likelihood, not the sampler's fast bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .belief import PosteriorSamples

__all__ = [
    "QueryScore",
    "PoolScores",
    "volume_removal_score",
    "conditional_entropy_score",
    "score_pool",
    "ranking_array",
    "SCORE_KINDS",
]

_LN2 = math.log(2.0)

SCORE_KINDS = ("entropy", "volume")


@dataclass(frozen=True)
class QueryScore:
    entropy_bits: float
    volume_removal: float
    mean_prob_positive: float


@dataclass(frozen=True)
class PoolScores:
    """Per-candidate scores, order-aligned with the scored pool."""

    entropy_bits: np.ndarray
    volume_removal: np.ndarray
    mean_prob_positive: np.ndarray

    def __len__(self) -> int:
        return self.entropy_bits.shape[0]

    def __getitem__(self, i: int) -> QueryScore:
        return QueryScore(
            entropy_bits=float(self.entropy_bits[i]),
            volume_removal=float(self.volume_removal[i]),
            mean_prob_positive=float(self.mean_prob_positive[i]),
        )


def _margins(psi: np.ndarray, samples: PosteriorSamples) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (samples.d,):
        raise ValueError(
            f"psi has shape {psi.shape}, expected ({samples.d},)"
        )
    return samples.samples @ psi


def volume_removal_score(psi: np.ndarray, samples: PosteriorSamples) -> float:
    """min(p, 1 - p) for p the sample-mean +1 probability; in [0, 0.5]."""
    p = float(expit(_margins(psi, samples)).mean())
    return min(p, 1.0 - p)


def conditional_entropy_score(psi: np.ndarray, samples: PosteriorSamples) -> float:
    """Sample-mean binary entropy of the answer, in bits; in [0, 1]."""
    p = expit(_margins(psi, samples))
    h_nats = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))
    return float(h_nats.mean()) / _LN2


def score_pool(
    psi_matrix: np.ndarray,
    samples: PosteriorSamples,
    chunk_size: int = 2048,
) -> PoolScores:
    """Score every row of psi_matrix; pure function of its inputs.

    Processes candidates in chunks so the (chunk, M) margin matrix stays
    cache- and memory-bounded at large pool sizes.
    """
    psi_matrix = np.asarray(psi_matrix, dtype=float)
    if psi_matrix.ndim != 2 or psi_matrix.shape[0] == 0:
        raise ValueError("psi_matrix must be a non-empty (K, d) array")
    if psi_matrix.shape[1] != samples.d:
        raise ValueError(
            f"pool dimension {psi_matrix.shape[1]} does not match "
            f"sample dimension {samples.d}"
        )
    k = psi_matrix.shape[0]
    w_t = samples.samples.T
    entropy = np.empty(k)
    volume = np.empty(k)
    prob = np.empty(k)
    for lo in range(0, k, chunk_size):
        hi = min(lo + chunk_size, k)
        margins = psi_matrix[lo:hi] @ w_t
        # One exp serves both the sigmoid and the entropy:
        # p = sigma(x), H_nats(x) = log1p(e) + |x| * e / (1 + e), e = exp(-|x|).
        ax = np.abs(margins)
        e = np.exp(-ax)
        denom = 1.0 + e
        sig_far = e / denom
        h_bits = (np.log1p(e) + ax * sig_far) / _LN2
        p = np.where(margins >= 0.0, 1.0 / denom, sig_far)
        entropy[lo:hi] = h_bits.mean(axis=1)
        pbar = p.mean(axis=1)
        prob[lo:hi] = pbar
        volume[lo:hi] = np.minimum(pbar, 1.0 - pbar)
    return PoolScores(
        entropy_bits=entropy, volume_removal=volume, mean_prob_positive=prob
    )


def ranking_array(scores: PoolScores, kind: str) -> np.ndarray:
    """The per-candidate score column used to rank candidates for selection."""
    if kind == "entropy":
        return scores.entropy_bits
    if kind == "volume":
        return scores.volume_removal
    raise ValueError(f"unknown score kind {kind!r}, expected one of {SCORE_KINDS}")
