"""Simulated respondent answering comparison queries for desk experiments.

Noiseless mode answers by the sign of the true margin; noisy mode follows the
softmax preference model.  Noisy draws are keyed by (seed, query counter), so
a session's answer sequence is reproducible without shared generator state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = ["OracleConfig", "Oracle", "sample_w_true"]


@dataclass(frozen=True)
class OracleConfig:
    w_true: np.ndarray
    noisy: bool
    seed: int

    def __post_init__(self) -> None:
        w = np.asarray(self.w_true, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("w_true must be a non-empty vector")
        if w @ w > 1.0 + 1e-9:
            raise ValueError("w_true must lie in the closed unit ball")
        object.__setattr__(self, "w_true", w)

    def to_json_dict(self) -> dict:
        return {
            "w_true": self.w_true.tolist(),
            "noisy": self.noisy,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "OracleConfig":
        return cls(
            w_true=np.asarray(record["w_true"], dtype=float),
            noisy=bool(record["noisy"]),
            seed=int(record["seed"]),
        )


class Oracle:
    """Stateful only in its query counter."""

    def __init__(self, cfg: OracleConfig):
        self.cfg = cfg
        self.counter = 0

    def respond(self, psi: np.ndarray) -> int:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != self.cfg.w_true.shape:
            raise ValueError(
                f"psi has shape {psi.shape}, expected {self.cfg.w_true.shape}"
            )
        margin = float(self.cfg.w_true @ psi)
        if not self.cfg.noisy:
            # Exact zero margins resolve to +1; they have probability zero
            # under continuous sampling.
            return +1 if margin >= 0.0 else -1
        rng = np.random.default_rng([self.cfg.seed, self.counter])
        self.counter += 1
        return +1 if rng.random() < float(expit(margin)) else -1


def sample_w_true(d: int, seed: int) -> np.ndarray:
    """Uniform direction scaled to norm 0.95, strictly inside the prior ball."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(d)
    return 0.95 * direction / np.linalg.norm(direction)
