"""Posterior belief over linear reward weights learned from pairwise preferences.

The belief is a set of Monte-Carlo samples of the weight vector w, constrained
to the closed unit ball, drawn with an adaptive Metropolis chain.  A response
to a query with feature difference psi carries a label in {+1, -1}; the
preference noise model is a softmax in <w, psi>.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "Response",
    "ChainDiagnostics",
    "AdaptiveMetropolisConfig",
    "PosteriorSamples",
    "likelihood",
    "log_likelihood_approx",
    "sample_posterior",
    "posterior_mean",
]

# Proposal covariance scaling 2.38^2 / d, the standard adaptive Metropolis
# factor; the empirical covariance is refreshed in blocks, not every step.
_HAARIO_NUMERATOR = 2.38**2
_CHOLESKY_REFRESH = 25


@dataclass(frozen=True)
class Response:
    """One answered comparison: feature difference and the chosen side.

    label is +1 when the first trajectory of the pair was preferred and -1
    otherwise, so that P(label | w) is a softmax in label * <w, psi>.
    """

    psi: np.ndarray
    label: int

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim != 1 or psi.size == 0:
            raise ValueError("psi must be a non-empty 1-D vector")
        if self.label not in (-1, +1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")
        object.__setattr__(self, "psi", psi)

    @property
    def d(self) -> int:
        return self.psi.size


@dataclass(frozen=True)
class ChainDiagnostics:
    acceptance_rate: float
    chain_length: int


@dataclass(frozen=True)
class AdaptiveMetropolisConfig:
    """Tuning of the random-walk chain.

    Defaults give exactly (total_steps - burn_in) / thinning = 1000 retained
    samples.  Before adaptation_start the proposal is isotropic with standard
    deviation initial_proposal_scale; afterwards it uses the scaled empirical
    covariance of the chain history, regularized by regularization_epsilon on
    the diagonal.
    """

    total_steps: int = 21000
    burn_in: int = 1000
    thinning: int = 20
    initial_proposal_scale: float = 0.1
    adaptation_start: int = 500
    regularization_epsilon: float = 1e-8

    def validate(self, m: int) -> None:
        if self.burn_in >= self.total_steps:
            raise ValueError(
                f"burn_in ({self.burn_in}) must be smaller than "
                f"total_steps ({self.total_steps})"
            )
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.initial_proposal_scale <= 0:
            raise ValueError("initial_proposal_scale must be positive")
        if self.regularization_epsilon <= 0:
            raise ValueError("regularization_epsilon must be positive")
        retained = (self.total_steps - self.burn_in) // self.thinning
        if retained < m:
            raise ValueError(
                f"chain retains {retained} samples after burn-in and "
                f"thinning but M={m} were requested"
            )


@dataclass(frozen=True)
class PosteriorSamples:
    """M weight samples, each inside the closed unit ball."""

    samples: np.ndarray  # (M, d)
    seed: int
    diagnostics: ChainDiagnostics

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValueError("samples must be a non-empty (M, d) array")
        norms_sq = np.einsum("ij,ij->i", samples, samples)
        if np.any(norms_sq > 1.0 + 1e-9):
            raise ValueError("every sample must lie in the closed unit ball")
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def to_json(self) -> str:
        record = {
            "d": self.d,
            "M": self.m,
            "seed": self.seed,
            "samples": self.samples.tolist(),
            "diagnostics": {
                "acceptance_rate": self.diagnostics.acceptance_rate,
                "chain_length": self.diagnostics.chain_length,
            },
        }
        return json.dumps(record)

    @classmethod
    def from_json(cls, text: str) -> "PosteriorSamples":
        record = json.loads(text)
        diag = ChainDiagnostics(
            acceptance_rate=record["diagnostics"]["acceptance_rate"],
            chain_length=record["diagnostics"]["chain_length"],
        )
        samples = np.asarray(record["samples"], dtype=float)
        if samples.shape != (record["M"], record["d"]):
            raise ValueError("sample array shape disagrees with header")
        return cls(samples=samples, seed=record["seed"], diagnostics=diag)


def _check_dims(w: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if w.shape != psi.shape or w.ndim != 1:
        raise ValueError(
            f"w and psi must be 1-D vectors of equal length, "
            f"got shapes {w.shape} and {psi.shape}"
        )
    return w, psi


def likelihood(label: int, w: np.ndarray, psi: np.ndarray) -> float:
    """Softmax probability of observing `label` for the comparison psi.

    Returns 1 / (1 + exp(-label * <w, psi>)).  The two labels' likelihoods
    sum to one.
    """
    if label not in (-1, +1):
        raise ValueError(f"label must be +1 or -1, got {label!r}")
    w, psi = _check_dims(w, psi)
    return float(expit(label * float(w @ psi)))


def log_likelihood_approx(label: int, w: np.ndarray, psi: np.ndarray) -> float:
    """Log of the chain's fast bound min(1, exp(label * <w, psi>)).

    Dominates the exact softmax everywhere and agrees with it within a
    factor of two; used only inside the Metropolis chain's log-posterior.
    """
    if label not in (-1, +1):
        raise ValueError(f"label must be +1 or -1, got {label!r}")
    w, psi = _check_dims(w, psi)
    return min(0.0, label * float(w @ psi))


def _response_matrix(responses: list[Response] | tuple[Response, ...], d: int) -> np.ndarray:
    # Row i is label_i * psi_i, so the chain's log-posterior is
    # sum(min(0, A @ w)).
    if not responses:
        return np.zeros((0, d))
    a = np.empty((len(responses), d))
    for i, r in enumerate(responses):
        if r.d != d:
            raise ValueError(
                f"response {i} has dimension {r.d}, expected {d}"
            )
        a[i] = r.label * r.psi
    return a


def sample_posterior(
    responses: list[Response] | tuple[Response, ...],
    d: int,
    m: int = 1000,
    cfg: AdaptiveMetropolisConfig | None = None,
    seed: int = 0,
    initial_point: np.ndarray | None = None,
) -> PosteriorSamples:
    """Draw M posterior samples of w given the accumulated responses.

    The target is the product of min(1, exp(label * <w, psi>)) terms under a
    uniform prior on the unit ball; proposals outside the ball are always
    rejected.  Bitwise deterministic for fixed (responses, cfg, seed,
    initial_point).  With no responses the samples approximate the uniform
    ball distribution.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    if cfg is None:
        cfg = AdaptiveMetropolisConfig()
    cfg.validate(m)
    a = _response_matrix(responses, d)

    if initial_point is None:
        w = np.zeros(d)
    else:
        w = np.asarray(initial_point, dtype=float).copy()
        if w.shape != (d,):
            raise ValueError(f"initial_point must have shape ({d},)")
        if w @ w > 1.0:
            raise ValueError("initial_point lies outside the unit ball")

    rng = np.random.default_rng(seed)
    # All randomness is pre-drawn so the loop is pure arithmetic.
    z = rng.standard_normal((cfg.total_steps, d))
    u = rng.random(cfg.total_steps)

    history = np.empty((cfg.total_steps + 1, d))
    history[0] = w
    # Running first/second moments of the full history (repeats included)
    # feed the adaptive covariance without an O(t) rescan per refresh.
    moment1 = w.copy()
    moment2 = np.outer(w, w)
    n_states = 1

    scale = _HAARIO_NUMERATOR / d
    chol = cfg.initial_proposal_scale * np.eye(d)
    log_post = float(np.minimum(0.0, a @ w).sum())
    accepted = 0

    for t in range(cfg.total_steps):
        if t >= cfg.adaptation_start and t % _CHOLESKY_REFRESH == 0:
            cov = (moment2 - np.outer(moment1, moment1) / n_states) / (n_states - 1)
            cov = scale * cov + cfg.regularization_epsilon * np.eye(d)
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                chol = cfg.initial_proposal_scale * np.eye(d)
        proposal = w + chol @ z[t]
        if proposal @ proposal <= 1.0:
            lp = float(np.minimum(0.0, a @ proposal).sum())
            if lp >= log_post or u[t] < np.exp(lp - log_post):
                w = proposal
                log_post = lp
                accepted += 1
        history[t + 1] = w
        moment1 += w
        moment2 += np.outer(w, w)
        n_states += 1

    retained = history[cfg.burn_in + cfg.thinning :: cfg.thinning]
    samples = retained[-m:].copy()
    diag = ChainDiagnostics(
        acceptance_rate=accepted / cfg.total_steps,
        chain_length=cfg.total_steps,
    )
    return PosteriorSamples(samples=samples, seed=seed, diagnostics=diag)


def posterior_mean(samples: PosteriorSamples) -> np.ndarray:
    """Coordinate-wise mean of the samples; its norm may be below one."""
    if samples.m == 0:
        raise ValueError("cannot average an empty sample set")
    return samples.samples.mean(axis=0)
