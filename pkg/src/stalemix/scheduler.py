"""Arrival processes: which client updates land each round, and how stale.

A client that starts a job at round t reads a model s_dl rounds old and its
update lands s_ul rounds later, so the applied update carries total
staleness s_dl + s_ul.  Policies either draw these delays (bernoulli_uniform),
force them to zero (always_fresh), or replay an exact script from a file.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from ._streams import schedule_block
from .errors import ConfigError, ScheduleError

KINDS = ("bernoulli_uniform", "always_fresh", "scripted")


class ArrivalEvent(NamedTuple):
    client: int
    s_dl: int
    s_ul: int
    start_round: int
    total_staleness: int


def _event(client: int, s_dl: int, s_ul: int, land_round: int) -> ArrivalEvent:
    return ArrivalEvent(
        client=client,
        s_dl=s_dl,
        s_ul=s_ul,
        start_round=land_round - s_ul,
        total_staleness=s_dl + s_ul,
    )


@dataclass(frozen=True)
class SchedulePolicy:
    kind: str
    tau_dl: int = 0
    tau_ul: int = 0
    participation_prob: float = 1.0
    fresh_prob: float = 0.0
    allow_multiple_inflight: bool = False
    script: tuple[tuple[int, int, int, int], ...] = ()  # (t, client, s_dl, s_ul)
    script_path: str | None = None  # provenance only; `script` is what runs

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.tau_dl < 0 or self.tau_ul < 0:
            raise ConfigError("staleness bounds must be nonnegative")
        if self.kind == "bernoulli_uniform":
            if not 0.0 < self.participation_prob <= 1.0:
                raise ConfigError("participation_prob must be in (0, 1]")
            if not 0.0 <= self.fresh_prob <= 1.0:
                raise ConfigError("fresh_prob must be in [0, 1]")
        if self.kind == "scripted" and not self.script:
            raise ConfigError("scripted policy needs a nonempty script")

    @property
    def tau(self) -> int:
        return self.tau_dl + self.tau_ul


def load_script(path) -> tuple[tuple[int, int, int, int], ...]:
    """Parse a scripted schedule: one `t client s_dl s_ul` line per event.

    Blank lines and `#` comments are ignored.
    """
    events = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ScheduleError(f"{path}:{lineno}: want 4 integers, got {len(fields)}")
            try:
                t, client, s_dl, s_ul = (int(v) for v in fields)
            except ValueError as exc:
                raise ScheduleError(f"{path}:{lineno}: non-integer field") from exc
            events.append((t, client, s_dl, s_ul))
    return tuple(events)


def lower_bound_fresh_prob(policy: SchedulePolicy) -> float:
    """Constructive lower bound on P(client arrives fresh in a round).

    Only defined for always_fresh (1) and non-blocking bernoulli_uniform
    (participation_prob * fresh_prob); with a blocking client model the
    per-round probability is history-dependent and no constructive bound is
    available, so stabilization-bound checks are disabled there.
    """
    if policy.kind == "always_fresh":
        return 1.0
    if policy.kind == "bernoulli_uniform":
        if not policy.allow_multiple_inflight:
            raise ConfigError(
                "no constructive fresh-participation bound with blocking clients"
            )
        return policy.participation_prob * policy.fresh_prob
    raise ConfigError("no constructive fresh-participation bound for scripted policies")


class InvalidRoundOrder(ConfigError):
    """next_arrivals was called out of sequence."""


class ArrivalProcess:
    """Stateful arrival stream for one run; owned by the simulation loop.

    Draws for client i at round t come from the stream keyed by
    (schedule, i, t), so the event sequence is a pure function of
    (policy, num_clients, seed) and is untouched by noise settings.
    """

    def __init__(self, policy: SchedulePolicy, num_clients: int, seed: int):
        if num_clients < 1:
            raise ConfigError("num_clients must be >= 1")
        self.policy = policy
        self.num_clients = num_clients
        self.seed = seed
        self._pending: dict[int, list[ArrivalEvent]] = {}
        self._busy_until = [-1] * num_clients
        self._next_round = 0
        self.started_jobs = 0
        self.landed_jobs = 0
        self._script_by_round: dict[int, list[ArrivalEvent]] = {}
        if policy.kind == "scripted":
            for t, client, s_dl, s_ul in policy.script:
                if t < 0:
                    raise ScheduleError(f"script round {t} is negative")
                if not 0 <= client < num_clients:
                    raise ScheduleError(
                        f"script client {client} out of range for {num_clients} clients"
                    )
                if not 0 <= s_dl <= policy.tau_dl or not 0 <= s_ul <= policy.tau_ul:
                    raise ScheduleError(
                        f"script staleness ({s_dl}, {s_ul}) exceeds bounds "
                        f"({policy.tau_dl}, {policy.tau_ul})"
                    )
                self._script_by_round.setdefault(t, []).append(_event(client, s_dl, s_ul, t))
            for evs in self._script_by_round.values():
                evs.sort(key=lambda e: (e.client, e.start_round))

    @property
    def pending_jobs(self) -> int:
        return sum(len(v) for v in self._pending.values())

    def next_arrivals(self, t: int) -> list[ArrivalEvent]:
        """Events landing at round t.  Rounds must be consumed in order.

        With blocking clients (allow_multiple_inflight false) a client stays
        busy through its landing round inclusive and may start again the
        round after.
        """
        if t != self._next_round:
            raise InvalidRoundOrder(
                f"rounds must be consumed sequentially: expected {self._next_round}, got {t}"
            )
        self._next_round += 1

        policy = self.policy
        if policy.kind == "scripted":
            events = self._script_by_round.get(t, [])
            self.started_jobs += len(events)
            self.landed_jobs += len(events)
            return list(events)

        if policy.kind == "always_fresh":
            events = [_event(i, 0, 0, t) for i in range(self.num_clients)]
            self.started_jobs += len(events)
            self.landed_jobs += len(events)
            return events

        # bernoulli_uniform: decide this round's job starts, then pop landings,
        # so a zero-turnaround job lands in the round it starts.
        u = schedule_block(self.seed, t, self.num_clients, 4)
        for i in range(self.num_clients):
            if not policy.allow_multiple_inflight and self._busy_until[i] >= t:
                continue
            if u[i, 0] >= policy.participation_prob:
                continue
            if u[i, 1] < policy.fresh_prob:
                s_dl = 0
                s_ul = 0
            else:
                s_dl = min(int(u[i, 2] * (policy.tau_dl + 1)), policy.tau_dl)
                s_ul = min(int(u[i, 3] * (policy.tau_ul + 1)), policy.tau_ul)
            land = t + s_ul
            self._pending.setdefault(land, []).append(_event(i, s_dl, s_ul, land))
            self._busy_until[i] = land
            self.started_jobs += 1

        events = self._pending.pop(t, [])
        events.sort(key=lambda e: (e.client, e.start_round))
        self.landed_jobs += len(events)
        return events
