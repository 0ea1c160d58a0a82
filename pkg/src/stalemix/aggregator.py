"""Server-side aggregation: staleness buckets, profile weights, padding.

Each round the server groups arriving updates by total staleness, gives
every bucket its profile weight (split uniformly inside the bucket), and
assigns the weight of an empty bucket to the cached iterate of that age, so
the update is always a convex combination with the prescribed staleness
distribution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvariantViolation
from .scheduler import ArrivalEvent

WEIGHTINGS = ("uniform", "fresh_mistake_aware")


class StalenessProfile:
    """Weights over total-staleness buckets 0..tau, summing to one.

    Derived quantities: mean_staleness (the profile-weighted mean age),
    staleness_factor (1 + mean_staleness, the only channel through which
    delay enters the mistake bounds), and tail_sums[j] = sum of weights at
    staleness >= j.
    """

    def __init__(self, weights):
        a = np.asarray(weights, dtype=np.float64)
        if a.ndim != 1 or a.shape[0] < 1:
            raise ConfigError("profile must be a nonempty 1-D weight vector")
        if np.any(a < 0.0):
            raise ConfigError("profile weights must be nonnegative")
        total = float(a.sum())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"profile weights sum to {total}, not 1 within 1e-9")
        self.weights = a / total
        self.tau = int(a.shape[0] - 1)
        ages = np.arange(self.tau + 1, dtype=np.float64)
        self.mean_staleness = float(ages @ self.weights)
        self.staleness_factor = 1.0 + self.mean_staleness
        self.tail_sums = self.weights[::-1].cumsum()[::-1].copy()

    def __eq__(self, other):
        return isinstance(other, StalenessProfile) and np.array_equal(
            self.weights, other.weights
        )

    def __repr__(self):
        return f"StalenessProfile({self.weights.tolist()})"


class ServerState:
    """Round counter plus the cache of the last tau+1 iterates.

    Slot s holds the model of s rounds ago; rounds before the start resolve
    to the zero vector.
    """

    def __init__(self, dim: int, tau: int):
        if dim < 1 or tau < 0:
            raise ConfigError("need dim >= 1 and tau >= 0")
        self.round = 0
        self._cache = [np.zeros(dim) for _ in range(tau + 1)]

    @property
    def tau(self) -> int:
        return len(self._cache) - 1

    @property
    def dim(self) -> int:
        return self._cache[0].shape[0]

    @property
    def current(self) -> np.ndarray:
        return self._cache[0]

    def iterate(self, staleness: int) -> np.ndarray:
        """The cached model of `staleness` rounds ago."""
        if not 0 <= staleness <= self.tau:
            raise InvariantViolation(
                f"staleness {staleness} outside cache range 0..{self.tau}"
            )
        return self._cache[staleness]

    def advance(self, w_next: np.ndarray) -> None:
        if w_next.shape != (self.dim,):
            raise ValueError(f"model shape {w_next.shape} != ({self.dim},)")
        self._cache.insert(0, w_next)
        self._cache.pop()
        self.round += 1


@dataclass(frozen=True)
class WeightAssignment:
    """Per-arrival weights plus padding weights for empty buckets.

    mu is aligned with the round's arrival list; padding maps the staleness
    of each empty bucket to that bucket's profile weight.
    """

    mu: np.ndarray
    padding: dict[int, float]

    def total_mass(self) -> float:
        return float(self.mu.sum()) + sum(self.padding.values())


def bucketize(events: list[ArrivalEvent], tau: int) -> list[list[int]]:
    """Partition arrival indices by total staleness into buckets 0..tau."""
    buckets: list[list[int]] = [[] for _ in range(tau + 1)]
    for idx, ev in enumerate(events):
        s = ev.total_staleness
        if not 0 <= s <= tau:
            raise InvariantViolation(f"arrival staleness {s} outside 0..{tau}")
        buckets[s].append(idx)
    return buckets


def assign_weights(
    buckets: list[list[int]],
    profile: StalenessProfile,
    mode: str = "uniform",
    mistakes=None,
) -> WeightAssignment:
    """Distribute each bucket's profile weight over its members.

    uniform: equal split inside every nonempty bucket; weights depend on
    bucket occupancy only.  fresh_mistake_aware: identical for buckets of
    age >= 1, but the fresh bucket's weight goes uniformly to the fresh
    arrivals that made at least one mistake (when any did).  The caller must
    only use fresh_mistake_aware on noiseless runs.
    """
    if mode not in WEIGHTINGS:
        raise ConfigError(f"unknown weighting mode {mode!r}")
    if len(buckets) != profile.tau + 1:
        raise ConfigError(
            f"{len(buckets)} buckets do not match profile tau {profile.tau}"
        )
    n_events = sum(len(b) for b in buckets)
    if mode == "fresh_mistake_aware" and mistakes is None:
        raise ConfigError("fresh_mistake_aware needs per-arrival mistake counts")

    mu = np.zeros(n_events)
    padding: dict[int, float] = {}
    for s, members in enumerate(buckets):
        w_s = float(profile.weights[s])
        if not members:
            padding[s] = w_s
            continue
        if mode == "fresh_mistake_aware" and s == 0:
            active = [i for i in members if mistakes[i] > 0]
            target = active if active else members
        else:
            target = members
        share = w_s / len(target)
        for i in target:
            mu[i] = share
    return WeightAssignment(mu=mu, padding=padding)


def server_step(
    state: ServerState, received: np.ndarray, assignment: WeightAssignment
) -> ServerState:
    """Apply one aggregation round in place and return the state.

    received holds the post-uplink model vectors, one row per arrival,
    aligned with assignment.mu.
    """
    mass = assignment.total_mass()
    if abs(mass - 1.0) > 1e-9:
        raise InvariantViolation(f"aggregation mass {mass} deviates from 1 beyond 1e-9")
    if received.shape[0] != assignment.mu.shape[0]:
        raise ValueError("received rows do not match assignment weights")
    if received.shape[0] > 0 and received.shape[1] != state.dim:
        raise ValueError(f"received dim {received.shape[1]} != state dim {state.dim}")

    w_next = np.zeros(state.dim)
    if received.shape[0] > 0:
        w_next += assignment.mu @ received
    for s, p in assignment.padding.items():
        w_next += p * state.iterate(s)
    state.advance(w_next)
    return state


def design_profile(frequencies, threshold: float = 0.5) -> tuple[StalenessProfile, bool]:
    """Pick the profile of minimal mean staleness on reliably occupied buckets.

    frequencies[s] estimates how often the staleness-s bucket is nonempty.
    All mass goes to the smallest staleness with frequency >= threshold; if
    no bucket qualifies, falls back to the uniform profile.  Returns
    (profile, used_fallback).
    """
    freq = np.asarray(frequencies, dtype=np.float64)
    if freq.ndim != 1 or freq.shape[0] < 1:
        raise ConfigError("frequencies must be a nonempty 1-D vector")
    if np.any(freq < 0.0) or np.any(freq > 1.0):
        raise ConfigError("frequencies must lie in [0, 1]")
    n = freq.shape[0]
    reliable = np.flatnonzero(freq >= threshold)
    if reliable.size == 0:
        return StalenessProfile(np.full(n, 1.0 / n)), True
    weights = np.zeros(n)
    weights[int(reliable[0])] = 1.0
    return StalenessProfile(weights), False


def check_mixing_identity(
    assignment: WeightAssignment,
    buckets: list[list[int]],
    series: np.ndarray,
    profile: StalenessProfile,
) -> bool:
    """Arrival weights plus padding reproduce the profile on any lag series.

    series[s] is the scalar attached to lag s.  Valid for bucket-only
    (uniform) weightings.
    """
    lhs = 0.0
    for s, members in enumerate(buckets):
        for i in members:
            lhs += float(assignment.mu[i]) * float(series[s])
    for s, p in assignment.padding.items():
        lhs += p * float(series[s])
    rhs = float(profile.weights @ np.asarray(series, dtype=np.float64))
    return abs(lhs - rhs) <= 1e-9 * (1.0 + abs(lhs) + abs(rhs))
