"""Dynamical environments, trajectory features, and query-pool generation.

Three self-contained deterministic environments share one interface: a
rollout from (x0, u_h, u_r) to a state sequence, and a feature map from the
trajectory to d raw feature values.  Pool features are affinely normalized
per dimension onto [-1, 1] over the sampled pool, except the linear system,
whose features are the control inputs themselves and are left untouched so
the identity is exact.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EnvironmentSpec",
    "Trajectory",
    "Normalization",
    "QueryCandidate",
    "QueryPool",
    "LinearSystem",
    "Driver2D",
    "Tosser2D",
    "ENV_NAMES",
    "make_env",
    "sample_pool",
    "save_pool",
    "load_pool",
]


@dataclass(frozen=True)
class EnvironmentSpec:
    name: str
    state_dim: int
    control_dim: int
    horizon: int
    feature_dim: int
    control_bounds: np.ndarray  # (control_dim, 2) rows of [lo, hi]
    has_other_agent: bool

    def __post_init__(self) -> None:
        bounds = np.asarray(self.control_bounds, dtype=float)
        if self.horizon < 1 or self.feature_dim < 1:
            raise ValueError("horizon and feature_dim must be >= 1")
        if bounds.shape != (self.control_dim, 2):
            raise ValueError("control_bounds must be (control_dim, 2)")
        if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ValueError("control bounds must be finite with lo < hi")
        object.__setattr__(self, "control_bounds", bounds)


@dataclass(frozen=True)
class Trajectory:
    """A feasible rollout: states[t+1] follows from states[t] and the controls."""

    states: np.ndarray  # (T+1, state_dim)
    controls_h: np.ndarray  # (T, control_dim)
    controls_r: np.ndarray | None  # (T, control_dim) or None

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]


@dataclass(frozen=True)
class Normalization:
    """Per-dimension affine map of pool features onto [-1, 1].

    The recorded lo/hi are the pool's observed per-dimension extrema, so the
    map is invertible; constant dimensions (hi == lo) map to 0.  An identity
    normalization applies no arithmetic at all.
    """

    lo: np.ndarray
    hi: np.ndarray
    identity: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    def apply(self, raw: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.asarray(raw, dtype=float)
        raw = np.asarray(raw, dtype=float)
        span = self.hi - self.lo
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * (raw - self.lo) / span - 1.0
        return np.where(span > 0.0, out, 0.0)

    def invert(self, normalized: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.asarray(normalized, dtype=float)
        normalized = np.asarray(normalized, dtype=float)
        span = self.hi - self.lo
        return np.where(
            span > 0.0, self.lo + (normalized + 1.0) * span / 2.0, self.lo
        )

    def to_json_dict(self) -> dict:
        return {
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "identity": self.identity,
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "Normalization":
        return cls(
            lo=np.asarray(record["lo"], dtype=float),
            hi=np.asarray(record["hi"], dtype=float),
            identity=bool(record["identity"]),
        )


@dataclass(frozen=True)
class QueryCandidate:
    """A pair of rollouts sharing x0 and u_r, reduced to its feature difference."""

    idx: int
    x0: np.ndarray
    u_r: np.ndarray | None
    u_h_a: np.ndarray
    u_h_b: np.ndarray
    phi_a: np.ndarray
    phi_b: np.ndarray
    psi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        phi_a = np.asarray(self.phi_a, dtype=float)
        phi_b = np.asarray(self.phi_b, dtype=float)
        object.__setattr__(self, "phi_a", phi_a)
        object.__setattr__(self, "phi_b", phi_b)
        expected = phi_a - phi_b
        if self.psi is None:
            object.__setattr__(self, "psi", expected)
        else:
            psi = np.asarray(self.psi, dtype=float)
            if not np.array_equal(psi, expected):
                raise ValueError(
                    f"candidate {self.idx}: psi does not equal phi_a - phi_b"
                )
            object.__setattr__(self, "psi", psi)

    def to_json_dict(self) -> dict:
        return {
            "idx": self.idx,
            "x0": np.asarray(self.x0, dtype=float).tolist(),
            "u_r": [] if self.u_r is None else np.asarray(self.u_r).tolist(),
            "u_h_a": np.asarray(self.u_h_a, dtype=float).tolist(),
            "u_h_b": np.asarray(self.u_h_b, dtype=float).tolist(),
            "phi_a": self.phi_a.tolist(),
            "phi_b": self.phi_b.tolist(),
            "psi": self.psi.tolist(),
        }

    @classmethod
    def from_json_dict(cls, record: dict) -> "QueryCandidate":
        u_r = record["u_r"]
        return cls(
            idx=int(record["idx"]),
            x0=np.asarray(record["x0"], dtype=float),
            u_r=None if u_r == [] else np.asarray(u_r, dtype=float),
            u_h_a=np.asarray(record["u_h_a"], dtype=float),
            u_h_b=np.asarray(record["u_h_b"], dtype=float),
            phi_a=np.asarray(record["phi_a"], dtype=float),
            phi_b=np.asarray(record["phi_b"], dtype=float),
            psi=np.asarray(record["psi"], dtype=float),
        )


@dataclass(frozen=True)
class QueryPool:
    env_name: str
    k: int
    seed: int
    d: int
    normalization: Normalization
    candidates: tuple[QueryCandidate, ...]
    psi_matrix: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if len(self.candidates) != self.k or self.k < 1:
            raise ValueError("candidate count must equal K >= 1")
        matrix = np.stack([c.psi for c in self.candidates])
        if matrix.shape[1] != self.d:
            raise ValueError("candidate dimension disagrees with header d")
        object.__setattr__(self, "psi_matrix", matrix)


class LinearSystem:
    """One-step system whose feature vector is the control input itself."""

    def __init__(self, d: int = 4):
        self.spec = EnvironmentSpec(
            name="lds",
            state_dim=d,
            control_dim=d,
            horizon=1,
            feature_dim=d,
            control_bounds=np.tile([-1.0, 1.0], (d, 1)),
            has_other_agent=False,
        )

    def identity_normalization(self) -> Normalization:
        d = self.spec.feature_dim
        return Normalization(lo=-np.ones(d), hi=np.ones(d), identity=True)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.spec.state_dim)

    def sample_controls(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, self.spec.control_dim)

    def fixed_u_r(self) -> None:
        return None

    def rollout(self, x0, u_h, u_r=None) -> Trajectory:
        u = _check_controls(np.asarray(u_h, dtype=float).ravel(), self.spec)
        states = np.vstack([np.asarray(x0, dtype=float), u])
        return Trajectory(states=states, controls_h=u[None, :], controls_r=None)

    def features(self, traj: Trajectory) -> np.ndarray:
        # phi equals the control input; the final state is that input.
        return traj.states[-1].copy()


class Driver2D:
    """Kinematic unicycle on a three-lane straight road with one other car.

    State (x, y, heading, speed); heading 0 points along the road (+y) and
    the lateral position x is measured against the lane centers.  The other
    car replays a fixed control script from a fixed start, so a candidate is
    fully determined by (x0, u_h).
    """

    DT = 0.1
    LANE_CENTERS = (-0.4, 0.0, 0.4)
    NOMINAL_SPEED = 1.0
    PROXIMITY_SCALE = 0.5
    OTHER_X0 = (0.0, 2.0, 0.0, 1.0)

    def __init__(self):
        self.spec = EnvironmentSpec(
            name="driver2d",
            state_dim=4,
            control_dim=2,
            horizon=50,
            feature_dim=4,
            control_bounds=np.array([[-0.5, 0.5], [-0.25, 0.25]]),
            has_other_agent=True,
        )

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.array(
            [
                rng.uniform(-0.5, 0.5),
                0.0,
                rng.uniform(-0.4, 0.4),
                rng.uniform(0.5, 1.5),
            ]
        )

    def sample_controls(self, rng: np.random.Generator) -> np.ndarray:
        t = self.spec.horizon
        steer = rng.uniform(-0.5, 0.5, t)
        accel = rng.uniform(-0.25, 0.25, t)
        return np.column_stack([steer, accel])

    def fixed_u_r(self) -> np.ndarray:
        return np.zeros((self.spec.horizon, 2))

    def _step(self, state: np.ndarray, control: np.ndarray) -> np.ndarray:
        x, y, heading, speed = state
        steer, accel = control
        return np.array(
            [
                x + speed * math.sin(heading) * self.DT,
                y + speed * math.cos(heading) * self.DT,
                heading + steer * self.DT,
                speed + accel * self.DT,
            ]
        )

    def rollout(self, x0, u_h, u_r=None) -> Trajectory:
        u_h = _check_controls(np.asarray(u_h, dtype=float), self.spec)
        if u_r is None:
            u_r = self.fixed_u_r()
        u_r = np.asarray(u_r, dtype=float)
        states = np.empty((self.spec.horizon + 1, 4))
        states[0] = np.asarray(x0, dtype=float)
        for t in range(self.spec.horizon):
            states[t + 1] = self._step(states[t], u_h[t])
        return Trajectory(states=states, controls_h=u_h, controls_r=u_r)

    def other_car_states(self, u_r: np.ndarray) -> np.ndarray:
        states = np.empty((self.spec.horizon + 1, 4))
        states[0] = np.array(self.OTHER_X0)
        for t in range(self.spec.horizon):
            states[t + 1] = self._step(states[t], u_r[t])
        return states

    def features(self, traj: Trajectory) -> np.ndarray:
        ego = traj.states[1:]
        other = self.other_car_states(traj.controls_r)[1:]
        lane_gap = ego[:, 0:1] - np.asarray(self.LANE_CENTERS)
        nearest_sq = (lane_gap**2).min(axis=1)
        speed_dev_sq = (ego[:, 3] - self.NOMINAL_SPEED) ** 2
        heading_sin_sq = np.sin(ego[:, 2]) ** 2
        gap_sq = ((ego[:, :2] - other[:, :2]) ** 2).sum(axis=1)
        proximity = np.exp(-gap_sq / self.PROXIMITY_SCALE**2)
        return np.array(
            [
                nearest_sq.mean(),
                speed_dev_sq.mean(),
                heading_sin_sq.mean(),
                proximity.mean(),
            ]
        )


class Tosser2D:
    """Planar projectile released from a fixed point with speed, angle, spin.

    The control (v, theta, omega) is constant over the flight, discretized at
    T equal steps of the closed-form flight time.  State (x, y, rotation,
    elapsed time); carrying elapsed time keeps the step a pure function of
    state and control while both compared throws share the same x0.
    """

    GRAVITY = 9.81
    BASKETS = ((4.0, 0.0), (8.0, 0.0))

    def __init__(self, release_height: float = 1.0):
        self.release_height = float(release_height)
        self.spec = EnvironmentSpec(
            name="tosser2d",
            state_dim=4,
            control_dim=3,
            horizon=100,
            feature_dim=4,
            control_bounds=np.array(
                [[0.0, 5.0], [0.1, math.pi / 2 - 0.1], [-6.0, 6.0]]
            ),
            has_other_agent=False,
        )

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([0.0, self.release_height, 0.0, 0.0])

    def sample_controls(self, rng: np.random.Generator) -> np.ndarray:
        lo = self.spec.control_bounds[:, 0]
        hi = self.spec.control_bounds[:, 1]
        return rng.uniform(lo, hi)

    def fixed_u_r(self) -> None:
        return None

    def flight_time(self, u: np.ndarray) -> float:
        v, theta, _ = u
        vy = v * math.sin(theta)
        h0 = self.release_height
        return (vy + math.sqrt(vy * vy + 2.0 * self.GRAVITY * h0)) / self.GRAVITY

    def rollout(self, x0, u_h, u_r=None) -> Trajectory:
        u = _check_controls(np.asarray(u_h, dtype=float).ravel(), self.spec)
        v, theta, omega = u
        t_total = self.flight_time(u)
        dt = t_total / self.spec.horizon
        vx = v * math.cos(theta)
        vy = v * math.sin(theta)
        g = self.GRAVITY
        states = np.empty((self.spec.horizon + 1, 4))
        states[0] = np.asarray(x0, dtype=float)
        for t in range(self.spec.horizon):
            x, y, rot, tau = states[t]
            states[t + 1] = (
                x + vx * dt,
                y + (vy - g * (tau + 0.5 * dt)) * dt,
                rot + omega * dt,
                tau + dt,
            )
        controls = np.tile(u, (self.spec.horizon, 1))
        return Trajectory(states=states, controls_h=controls, controls_r=None)

    def features(self, traj: Trajectory) -> np.ndarray:
        x = traj.states[:, 0]
        y = traj.states[:, 1]
        rot = traj.states[:, 2]
        spin_total = np.abs(np.diff(rot)).sum()
        final = traj.states[-1, :2]
        basket_dist = min(
            math.hypot(final[0] - bx, final[1] - by) for bx, by in self.BASKETS
        )
        return np.array([x.max(), y.max(), spin_total, basket_dist])


ENV_NAMES = ("lds", "driver2d", "tosser2d")


def make_env(name: str, d: int = 4):
    if name == "lds":
        return LinearSystem(d=d)
    if name == "driver2d":
        return Driver2D()
    if name == "tosser2d":
        return Tosser2D()
    raise ValueError(f"unknown environment {name!r}, expected one of {ENV_NAMES}")


def _check_controls(u: np.ndarray, spec: EnvironmentSpec) -> np.ndarray:
    rows = np.atleast_2d(u)
    if rows.shape[-1] != spec.control_dim:
        raise ValueError(
            f"controls must have {spec.control_dim} columns, got {rows.shape}"
        )
    lo = spec.control_bounds[:, 0]
    hi = spec.control_bounds[:, 1]
    if np.any(rows < lo - 1e-12) or np.any(rows > hi + 1e-12):
        raise ValueError("controls outside the environment bounds")
    return u


def sample_pool(env, k: int, seed: int) -> QueryPool:
    """Draw K candidate query pairs and normalize their features once.

    Per candidate, the draw order is fixed (x0, then both control sequences),
    so pools are bitwise reproducible per seed.  Both rollouts of a pair
    share x0 and the environment's fixed other-agent script.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    u_r = env.fixed_u_r()
    raw_a = np.empty((k, env.spec.feature_dim))
    raw_b = np.empty((k, env.spec.feature_dim))
    drawn = []
    for i in range(k):
        x0 = env.initial_state(rng)
        u_a = env.sample_controls(rng)
        u_b = env.sample_controls(rng)
        raw_a[i] = env.features(env.rollout(x0, u_a, u_r))
        raw_b[i] = env.features(env.rollout(x0, u_b, u_r))
        drawn.append((x0, u_a, u_b))

    if isinstance(env, LinearSystem):
        norm = env.identity_normalization()
    else:
        stacked = np.vstack([raw_a, raw_b])
        norm = Normalization(lo=stacked.min(axis=0), hi=stacked.max(axis=0))

    candidates = []
    for i, (x0, u_a, u_b) in enumerate(drawn):
        candidates.append(
            QueryCandidate(
                idx=i,
                x0=x0,
                u_r=u_r,
                u_h_a=u_a,
                u_h_b=u_b,
                phi_a=norm.apply(raw_a[i]),
                phi_b=norm.apply(raw_b[i]),
            )
        )
    return QueryPool(
        env_name=env.spec.name,
        k=k,
        seed=seed,
        d=env.spec.feature_dim,
        normalization=norm,
        candidates=tuple(candidates),
    )


def save_pool(pool: QueryPool, path: str) -> None:
    """Write header plus one candidate per line; the write is atomic."""
    header = {
        "env": pool.env_name,
        "K": pool.k,
        "seed": pool.seed,
        "d": pool.d,
        "normalization": pool.normalization.to_json_dict(),
    }
    lines = [json.dumps(header)]
    lines.extend(json.dumps(c.to_json_dict()) for c in pool.candidates)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_pool(path: str) -> QueryPool:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise ValueError(f"{path}: missing pool header")
        header = json.loads(header_line)
        candidates = [
            QueryCandidate.from_json_dict(json.loads(line))
            for line in fh
            if line.strip()
        ]
    return QueryPool(
        env_name=header["env"],
        k=int(header["K"]),
        seed=int(header["seed"]),
        d=int(header["d"]),
        normalization=Normalization.from_json_dict(header["normalization"]),
        candidates=tuple(candidates),
    )


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temporary file and rename, so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
