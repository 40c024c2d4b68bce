"""Mixed Hegselmann-Krause opinion dynamics: state, stubbornness schedules,
and the one-step update rule.

Opinions live in R^d. At each step every agent averages the opinions of its
neighbors (everyone within Euclidean distance epsilon, itself included) and
mixes that average with its current opinion:

    x_i(t+1) = a_i(t) * x_i(t) + (1 - a_i(t)) * mean_{j in N_i(t)} x_j(t)

where a_i(t) in [0, 1] is the agent's stubbornness at time t. a = 0
everywhere recovers the plain synchronous model; a = 1 everywhere except one
uniformly chosen agent recovers the asynchronous one.

Arithmetic contract (this is what makes trajectories bitwise reproducible by
an independent implementation):

* squared distances accumulate per coordinate, ascending, left to right;
* the neighbor predicate is ``dist_sq <= epsilon * epsilon`` in plain
  floating point (ties at the boundary are neighbors);
* neighbor means accumulate over ascending agent index, left to right, then
  divide by the neighbor count;
* agents with a_i = 1, and agents whose only neighbor is themselves, keep
  their opinion bit for bit; agents with a_i = 0 adopt the neighbor mean bit
  for bit; otherwise the convex combination above is evaluated elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, ScheduleExhaustedError

SCHEDULE_KINDS = ("synchronous", "asynchronous", "constant", "power_law", "table")


@dataclass(frozen=True)
class OpinionState:
    """Opinions of n agents in R^d at time step t, with the confidence bound."""

    t: int
    x: np.ndarray  # shape (n, d), float64
    epsilon: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"opinions must be a 2-D array, got shape {x.shape}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("opinions must be finite (no NaN/Inf)")
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.t < 0:
            raise ValueError(f"time index must be nonnegative, got {self.t}")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class StubbornnessSchedule:
    """Rule producing the stubbornness vector a(t) in [0,1]^n for each t.

    Kinds:
      synchronous   a(t) = 0 everywhere (fully open-minded agents).
      asynchronous  a(t) = 1 everywhere except one coordinate, chosen
                    uniformly from a counter-based stream keyed by (seed, t),
                    which is 0.
      constant      a fixed vector, given as ``alpha``.
      power_law     a_i(t) = 1 - min(1, 1/(t+1)**a) for every i, ``a > 1``.
      table         explicit per-time rows; querying past the last row raises
                    ScheduleExhaustedError.
    """

    kind: str
    alpha: Optional[np.ndarray] = None  # constant
    exponent: Optional[float] = None  # power_law
    table: Optional[tuple] = None  # table: tuple of row arrays
    seed: Optional[int] = None  # asynchronous (falls back to the run seed)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.kind == "constant":
            if self.alpha is None:
                raise ConfigError("constant schedule requires an alpha vector")
            a = np.asarray(self.alpha, dtype=np.float64)
            _check_alpha(a)
            object.__setattr__(self, "alpha", a)
        elif self.kind == "power_law":
            if self.exponent is None or not (self.exponent > 1):
                raise ConfigError(f"power_law schedule requires exponent a > 1, got {self.exponent}")
        elif self.kind == "table":
            if not self.table:
                raise ConfigError("table schedule requires at least one row")
            rows = tuple(np.asarray(r, dtype=np.float64) for r in self.table)
            for r in rows:
                _check_alpha(r)
            object.__setattr__(self, "table", rows)

    def alpha_at(self, t: int, n: int, seed: Optional[int] = None) -> np.ndarray:
        """The stubbornness vector applied at time t for n agents."""
        return schedule_alpha(self, t, n, seed)

    def descriptor(self) -> dict:
        """JSON-serializable description (round-trips through configs)."""
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["alpha"] = [float(v) for v in self.alpha]
        elif self.kind == "power_law":
            out["a"] = float(self.exponent)
        elif self.kind == "table":
            out["table"] = [[float(v) for v in row] for row in self.table]
        if self.seed is not None:
            out["seed"] = int(self.seed)
        return out


def _check_alpha(a: np.ndarray):
    if a.ndim != 1:
        raise ConfigError(f"alpha must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
        raise ConfigError("every stubbornness entry must lie in [0, 1]")


def schedule_alpha(schedule: StubbornnessSchedule, t: int, n: int, seed: Optional[int] = None) -> np.ndarray:
    """Evaluate a schedule at time t.

    The asynchronous kind derives its choice from (seed, t) alone, so replays
    and partial re-runs agree exactly.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if schedule.kind == "synchronous":
        return np.zeros(n)
    if schedule.kind == "constant":
        if schedule.alpha.shape[0] != n:
            raise ConfigError(f"constant alpha has length {schedule.alpha.shape[0]}, expected {n}")
        return schedule.alpha.copy()
    if schedule.kind == "power_law":
        val = 1.0 - min(1.0, 1.0 / float(t + 1) ** schedule.exponent)
        return np.full(n, val)
    if schedule.kind == "table":
        if t >= len(schedule.table):
            raise ScheduleExhaustedError(
                f"table schedule has {len(schedule.table)} rows, queried at t={t}"
            )
        row = schedule.table[t]
        if row.shape[0] != n:
            raise ConfigError(f"table row {t} has length {row.shape[0]}, expected {n}")
        return row.copy()
    # asynchronous: everyone absolutely stubborn except one uniformly chosen agent
    key = schedule.seed if schedule.seed is not None else seed
    if key is None:
        raise ConfigError("asynchronous schedule needs a seed (schedule seed or run seed)")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(key) & (2**64 - 1), int(t))))
    chosen = int(rng.integers(0, n))
    a = np.ones(n)
    a[chosen] = 0.0
    return a


@dataclass
class ModelConfig:
    """Everything needed to reproduce one run."""

    initial: np.ndarray  # (n, d) initial opinions
    epsilon: float
    schedule: StubbornnessSchedule
    max_steps: int
    consensus_tol: float = 1e-12
    seed: int = 0
    monitors: tuple = ("energy", "contraction", "merge")

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=np.float64)
        # reuse the state validator
        OpinionState(0, self.initial, self.epsilon)
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if not (self.consensus_tol > 0):
            raise ConfigError(f"consensus_tol must be positive, got {self.consensus_tol}")
        known = {"energy", "contraction", "merge", "interaction", "hull"}
        bad = set(self.monitors) - known
        if bad:
            raise ConfigError(f"unknown monitor flags {sorted(bad)}; known: {sorted(known)}")
        self.monitors = tuple(self.monitors)

    @property
    def n(self) -> int:
        return self.initial.shape[0]

    @property
    def d(self) -> int:
        return self.initial.shape[1]


def squared_distances(x: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, accumulated per coordinate.

    Coordinates are added ascending, left to right, so an independent
    implementation following the same order reproduces every bit.
    """
    n, d = x.shape
    acc = (x[:, None, 0] - x[None, :, 0]) ** 2
    for k in range(1, d):
        acc = acc + (x[:, None, k] - x[None, :, k]) ** 2
    return acc


def neighbor_matrix(state: OpinionState) -> np.ndarray:
    """Boolean n-by-n matrix; entry (i, j) true iff j is a neighbor of i.

    The diagonal is always true, and the relation is symmetric. Boundary ties
    (distance exactly epsilon) count as neighbors.
    """
    d2 = squared_distances(state.x)
    return d2 <= state.epsilon * state.epsilon


def neighborhoods(state: OpinionState) -> list[set[int]]:
    """Neighbor index sets N_i for every agent (0-based, self included)."""
    mask = neighbor_matrix(state)
    return [set(np.flatnonzero(mask[i]).tolist()) for i in range(state.n)]


def averaging_matrix(state: OpinionState) -> np.ndarray:
    """Row-stochastic matrix A with A[i, j] = 1/|N_i| for j in N_i, else 0."""
    mask = neighbor_matrix(state)
    counts = mask.sum(axis=1).astype(np.float64)
    return mask.astype(np.float64) / counts[:, None]


def neighbor_means(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-agent mean of neighbor opinions under the arithmetic contract."""
    n = x.shape[0]
    out = np.empty_like(x)
    for i in range(n):
        idx = np.flatnonzero(mask[i])
        s = x[idx[0]].copy()
        for j in idx[1:]:
            s += x[j]
        out[i] = s / len(idx)
    return out


def step(state: OpinionState, alpha: np.ndarray) -> OpinionState:
    """Advance the dynamics one step under stubbornness vector alpha.

    Every new opinion lies in the convex hull of the agent's neighbors'
    opinions. Absolutely stubborn agents (alpha_i = 1) and isolated agents
    keep their opinion bit for bit; absolutely open-minded agents
    (alpha_i = 0) adopt the neighbor mean bit for bit.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (state.n,):
        raise ConfigError(f"alpha has shape {alpha.shape}, expected ({state.n},)")
    if np.any(alpha < 0.0) or np.any(alpha > 1.0):
        raise ConfigError("every stubbornness entry must lie in [0, 1]")
    mask = neighbor_matrix(state)
    means = neighbor_means(state.x, mask)
    new_x = np.empty_like(state.x)
    degrees = mask.sum(axis=1)
    for i in range(state.n):
        a = alpha[i]
        if a == 1.0 or degrees[i] == 1:
            new_x[i] = state.x[i]
        elif a == 0.0:
            new_x[i] = means[i]
        else:
            new_x[i] = a * state.x[i] + (1.0 - a) * means[i]
    return OpinionState(state.t + 1, new_x, state.epsilon)
