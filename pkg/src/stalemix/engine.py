"""Round engine: full simulation, trace metrics, invariant checks, Monte Carlo.

One round = collect the arrivals, train each from its cached (noisy) stale
model, aggregate with profile weights and padding, and record everything
needed to audit the run afterwards: per-round weighted mistakes, the
witness-aligned progress and squared norm of the iterate, correctness flags,
and per-arrival progress-inequality checks.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import progress_norm_ok
from ._streams import DOWNLINK, REPLICA, SHARD_ORDER, UPLINK, derive_key, extend_key
from .aggregator import (
    ServerState,
    StalenessProfile,
    WEIGHTINGS,
    WeightAssignment,
    assign_weights,
    bucketize,
    server_step,
)
from .channel import NoiseModel, noise_energy, perturb
from .dataset import Dataset, generate_dataset, load_dataset
from .errors import ConfigError
from .perceptron import shard_order, train_ordered
from .scheduler import ArrivalEvent, ArrivalProcess, SchedulePolicy, lower_bound_fresh_prob


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class DataSpec:
    dim: int = 2
    num_clients: int = 1
    examples_per_client: int = 10
    target_margin: float = 0.1
    radius: float = 1.0
    seed: int = 0
    partition: str = "balanced"
    path: str | None = None

    def validate(self) -> None:
        if self.path:
            return  # certificates are validated when the file is loaded
        if self.dim < 1 or self.num_clients < 1 or self.examples_per_client < 1:
            raise ConfigError("dataset sizes must be positive")
        if not 0.0 < self.target_margin < self.radius:
            raise ConfigError("need 0 < target_margin < radius")
        if self.partition not in ("balanced", "label_skew"):
            raise ConfigError(f"unknown partition {self.partition!r}")

    def build(self) -> Dataset:
        if self.path:
            return load_dataset(self.path)
        return generate_dataset(
            self.dim,
            self.num_clients,
            self.examples_per_client,
            self.target_margin,
            self.radius,
            self.seed,
            partition=self.partition,
        )


@dataclass(frozen=True)
class RunConfig:
    data: DataSpec
    profile: tuple[float, ...]
    policy: SchedulePolicy
    noise: NoiseModel = NoiseModel()
    weighting: str = "uniform"
    horizon: int = 100
    seed: int = 0
    reps: int = 1
    epochs: int = 1
    checkpoints: tuple[int, ...] = ()
    # shard orders are fixed per experiment; replicas rederive schedule and
    # noise streams from their own seed but keep the same visiting orders
    order_seed: int | None = None

    def validate(self) -> None:
        self.data.validate()
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if len(self.profile) != self.policy.tau + 1:
            raise ConfigError(
                f"profile length {len(self.profile)} != tau+1 = {self.policy.tau + 1}"
            )
        StalenessProfile(self.profile)  # validates weights
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.weighting == "fresh_mistake_aware" and noise_energy(self.noise) > 0.0:
            raise ConfigError("fresh_mistake_aware weighting requires noiseless links")
        for ck in self.checkpoints:
            if not 1 <= ck <= self.horizon:
                raise ConfigError(f"checkpoint {ck} outside 1..{self.horizon}")


def resolve_checkpoints(horizon: int, checkpoints: tuple[int, ...] = ()) -> tuple[int, ...]:
    """Explicit checkpoints, or the default geometric grid up to the horizon."""
    if checkpoints:
        return tuple(sorted(set(checkpoints)))
    if horizon < 1:
        return ()
    grid = {horizon // 16, horizon // 8, horizon // 4, horizon // 2, horizon}
    return tuple(sorted(c for c in grid if c >= 1))


# ---------------------------------------------------------------------------
# trace records

@dataclass(slots=True)
class RoundRecord:
    t: int
    arrivals: list[ArrivalEvent]
    assignment: WeightAssignment
    mistakes: np.ndarray  # per-arrival local mistake counts
    weighted_mistakes: float  # sum of weight * mistakes over arrivals
    progress: float  # <witness, w_t> for the pre-update iterate
    sq_norm: float  # |w_t|^2
    correct: bool  # w_t strictly separates the global dataset
    local_checks_ok: np.ndarray  # per-arrival progress/norm inequality flags
    mass_error: float
    vectors: list[tuple[np.ndarray, np.ndarray]] | None = None  # (init, w_out) debug


@dataclass
class RunTrace:
    config: RunConfig
    margin: float
    radius: float
    rounds: list[RoundRecord]
    progress: np.ndarray  # length horizon+1, includes the final iterate
    sq_norm: np.ndarray  # length horizon+1
    weighted: np.ndarray  # per-round weighted mistakes, length horizon
    cum_weighted: np.ndarray  # prefix sums, cum_weighted[j] = sum over t < j
    correct: np.ndarray  # bool, length horizon+1
    final_model: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.rounds)


# ---------------------------------------------------------------------------
# simulation

class Simulation:
    """Single-replica simulator; owns the server state and arrival queue."""

    def __init__(
        self,
        dataset: Dataset,
        profile: StalenessProfile,
        policy: SchedulePolicy,
        noise: NoiseModel = NoiseModel(),
        weighting: str = "uniform",
        seed: int = 0,
        epochs: int = 1,
        record_vectors: bool = False,
        order_seed: int | None = None,
    ):
        if profile.tau != policy.tau:
            raise ConfigError(
                f"profile tau {profile.tau} != schedule tau {policy.tau}"
            )
        if weighting == "fresh_mistake_aware" and noise_energy(noise) > 0.0:
            raise ConfigError("fresh_mistake_aware weighting requires noiseless links")
        self.dataset = dataset
        self.profile = profile
        self.policy = policy
        self.noise = noise
        self.weighting = weighting
        self.seed = seed
        self.epochs = epochs
        self.record_vectors = record_vectors
        self.state = ServerState(dataset.dim, profile.tau)
        self.process = ArrivalProcess(policy, dataset.num_clients, seed)
        # one fixed shard order per (client, run), reused every epoch
        base = seed if order_seed is None else order_seed
        self._orders = [
            shard_order(derive_key(base, SHARD_ORDER, i), dataset.client_x[i].shape[0])
            for i in range(dataset.num_clients)
        ]
        x, y = dataset.stacked()
        self._signed_x = y[:, None] * x
        self._witness = dataset.witness
        self._margin = dataset.certified_margin
        self._radius2 = dataset.certified_radius ** 2
        self._dl_prefix = derive_key(seed, DOWNLINK)
        self._ul_prefix = derive_key(seed, UPLINK)

    def _is_correct(self, w: np.ndarray) -> bool:
        return bool((self._signed_x @ w).min() > 0.0)

    def run_round(self) -> RoundRecord:
        """Execute one full server round at the current round index."""
        state = self.state
        t = state.round
        w_t = state.current
        a_t = float(self._witness @ w_t)
        b_t = float(w_t @ w_t)
        correct = self._is_correct(w_t)

        events = self.process.next_arrivals(t)
        n = len(events)
        received = np.empty((n, state.dim))
        mistakes = np.zeros(n, dtype=np.int64)
        checks = np.ones(n, dtype=bool)
        vectors = [] if self.record_vectors else None

        noise = self.noise
        dl_on = noise.family != "none" and noise.sigma2_dl > 0.0
        ul_on = noise.family != "none" and noise.sigma2_ul > 0.0
        for e, ev in enumerate(events):
            stale = state.iterate(ev.total_staleness)
            if dl_on:
                key = extend_key(self._dl_prefix, ev.client, ev.start_round)
                init = perturb(stale, noise.sigma2_dl, noise.family, key)
            else:
                init = stale
            xs, ys = self.dataset.shard(ev.client)
            w_out, k = train_ordered(init, xs, ys, self._orders[ev.client], self.epochs)
            checks[e] = progress_norm_ok(
                self._witness, init, w_out, k, self._margin, self._radius2
            )
            if ul_on:
                key = extend_key(self._ul_prefix, ev.client, ev.start_round)
                w_up = perturb(w_out, noise.sigma2_ul, noise.family, key)
            else:
                w_up = w_out
            received[e] = w_up
            mistakes[e] = k
            if vectors is not None:
                vectors.append((np.array(init, copy=True), w_out))

        buckets = bucketize(events, self.profile.tau)
        assignment = assign_weights(buckets, self.profile, self.weighting, mistakes)
        kappa = float(assignment.mu @ mistakes) if n else 0.0
        mass_error = abs(assignment.total_mass() - 1.0)
        server_step(state, received, assignment)

        return RoundRecord(
            t=t,
            arrivals=events,
            assignment=assignment,
            mistakes=mistakes,
            weighted_mistakes=kappa,
            progress=a_t,
            sq_norm=b_t,
            correct=correct,
            local_checks_ok=checks,
            mass_error=mass_error,
            vectors=vectors,
        )


def run(config: RunConfig, dataset: Dataset | None = None, record_vectors: bool = False) -> RunTrace:
    """Execute `config.horizon` rounds; a pure function of (config, dataset)."""
    config.validate()
    if dataset is None:
        dataset = config.data.build()
    profile = StalenessProfile(config.profile)
    sim = Simulation(
        dataset,
        profile,
        config.policy,
        config.noise,
        config.weighting,
        config.seed,
        config.epochs,
        record_vectors,
        config.order_seed,
    )
    records = [sim.run_round() for _ in range(config.horizon)]

    horizon = config.horizon
    progress = np.empty(horizon + 1)
    sq_norm = np.empty(horizon + 1)
    weighted = np.empty(horizon)
    correct = np.empty(horizon + 1, dtype=bool)
    for rec in records:
        progress[rec.t] = rec.progress
        sq_norm[rec.t] = rec.sq_norm
        weighted[rec.t] = rec.weighted_mistakes
        correct[rec.t] = rec.correct
    w_final = sim.state.current.copy()
    progress[horizon] = float(dataset.witness @ w_final)
    sq_norm[horizon] = float(w_final @ w_final)
    correct[horizon] = sim._is_correct(w_final)
    cum = np.zeros(horizon + 1)
    np.cumsum(weighted, out=cum[1:])

    return RunTrace(
        config=config,
        margin=dataset.certified_margin,
        radius=dataset.certified_radius,
        rounds=records,
        progress=progress,
        sq_norm=sq_norm,
        weighted=weighted,
        cum_weighted=cum,
        correct=correct,
        final_model=w_final,
    )


# ---------------------------------------------------------------------------
# bounds

def weighted_mistake_bound(
    staleness_factor: float, radius: float, margin: float, horizon: int, noise: float
) -> float:
    """Expected cumulative weighted-mistake bound over `horizon` rounds."""
    if margin <= 0.0:
        raise ValueError("margin must be positive")
    s = staleness_factor
    return s * radius**2 / margin**2 + math.sqrt(s * horizon * noise) / margin


def stabilization_bounds(
    staleness_factor: float,
    radius: float,
    margin: float,
    alpha0: float,
    fresh_floor: float,
    tau: int,
) -> tuple[float, float]:
    """Expected bounds on the first-correct round and the stabilization round.

    Requires positive fresh-bucket weight alpha0 and a positive constructive
    fresh-participation floor.
    """
    if margin <= 0.0:
        raise ValueError("margin must be positive")
    if alpha0 <= 0.0 or fresh_floor <= 0.0:
        raise ConfigError("stabilization bounds need alpha0 > 0 and fresh_floor > 0")
    hit = staleness_factor * radius**2 / (alpha0 * fresh_floor * margin**2)
    return hit, (tau + 1) * hit


# ---------------------------------------------------------------------------
# trace diagnostics and checks

def _ineq_tol(lhs: float, rhs: float) -> float:
    return 1e-9 * (1.0 + abs(lhs) + abs(rhs))


def compute_potentials(trace: RunTrace, profile: StalenessProfile) -> tuple[np.ndarray, np.ndarray]:
    """Tail-sum-weighted progress and norm series, one value per round 0..A."""
    n = trace.horizon + 1
    c = profile.tail_sums
    phi = np.convolve(trace.progress, c)[:n]
    psi = np.convolve(trace.sq_norm, c)[:n]
    return phi, psi


def check_potential_steps(trace: RunTrace, profile: StalenessProfile) -> list[int]:
    """Rounds violating the noiseless one-step potential inequalities.

    Valid only for noiseless runs with bucket-only (uniform) weights; an
    empty list means the whole trace satisfies both inequalities.
    """
    if noise_energy(trace.config.noise) > 0.0:
        raise ConfigError("one-step potential check applies to noiseless runs only")
    if trace.config.weighting != "uniform":
        raise ConfigError("one-step potential check assumes uniform weighting")
    phi, psi = compute_potentials(trace, profile)
    r2 = trace.radius**2
    bad = []
    for t in range(trace.horizon):
        lo = phi[t] + trace.margin * trace.weighted[t]
        hi = psi[t] + r2 * trace.weighted[t]
        if phi[t + 1] < lo - _ineq_tol(phi[t + 1], lo) or psi[t + 1] > hi + _ineq_tol(
            psi[t + 1], hi
        ):
            bad.append(t)
    return bad


def check_noiseless_budget(
    trace: RunTrace, profile: StalenessProfile, checkpoints: tuple[int, ...]
) -> list[tuple[int, float, float]]:
    """Checkpoints where cumulative weighted mistakes exceed the noiseless cap."""
    cap = profile.staleness_factor * trace.radius**2 / trace.margin**2
    bad = []
    for ck in checkpoints:
        k = float(trace.cum_weighted[ck])
        if k > cap + _ineq_tol(k, cap):
            bad.append((ck, k, cap))
    return bad


def check_window_permanence(trace: RunTrace, tau: int) -> list[int]:
    """Incorrect rounds observed after tau+1 consecutive correct rounds."""
    bad = []
    run_len = 0
    armed = False
    for idx, ok in enumerate(trace.correct):
        if ok:
            run_len += 1
            if run_len >= tau + 1:
                armed = True
        else:
            if armed:
                bad.append(idx)
            run_len = 0
    return bad


@dataclass(frozen=True)
class StopTimes:
    first_correct: int | None
    stabilization: int | None
    certified: bool


def extract_stop_times(trace: RunTrace) -> StopTimes:
    """First correct round and start of the trace's trailing correct run.

    The stabilization time is certified only when the trailing run spans at
    least tau+1 observed rounds; in a noiseless run that window guarantees
    every later iterate stays correct.  Either time is None when not reached
    within the horizon.
    """
    flags = trace.correct
    hits = np.flatnonzero(flags)
    first = int(hits[0]) if hits.size else None
    if not flags[-1]:
        return StopTimes(first_correct=first, stabilization=None, certified=False)
    misses = np.flatnonzero(~flags)
    start = int(misses[-1]) + 1 if misses.size else 0
    tail = len(flags) - start
    tau = trace.config.policy.tau
    return StopTimes(first_correct=first, stabilization=start, certified=tail >= tau + 1)


def mixing_residuals(trace: RunTrace, profile: StalenessProfile) -> tuple[float, float]:
    """Mean per-round residuals of the expected progress/norm recursions.

    Both residuals have nonnegative expectation; their Monte Carlo means are
    used as one-sided statistical checks.
    """
    if trace.horizon == 0:
        return 0.0, 0.0
    a, b, kap = trace.progress, trace.sq_norm, trace.weighted
    n = trace.horizon
    alpha = profile.weights
    conv_a = np.convolve(a, alpha)[:n]
    conv_b = np.convolve(b, alpha)[:n]
    v = noise_energy(trace.config.noise)
    res_a = a[1:] - conv_a - trace.margin * kap
    res_b = conv_b + trace.radius**2 * kap + v - b[1:]
    return float(res_a.mean()), float(res_b.mean())


@dataclass
class TraceChecks:
    """Pathwise audit of one trace; all lists/counters empty or zero on a clean run."""

    local_failures: int
    local_pairs: int
    mass_violations: list[int]
    budget_violations: list[tuple[int, float, float]]
    potential_violations: list[int] | None  # None when not applicable
    window_violations: list[int] | None

    @property
    def ok(self) -> bool:
        return (
            self.local_failures == 0
            and not self.mass_violations
            and not self.budget_violations
            and not (self.potential_violations or [])
            and not (self.window_violations or [])
        )


def verify_trace(
    trace: RunTrace, profile: StalenessProfile, checkpoints: tuple[int, ...]
) -> TraceChecks:
    """Run every applicable pathwise check on a finished trace."""
    local_failures = 0
    local_pairs = 0
    mass_violations = []
    for rec in trace.rounds:
        local_pairs += len(rec.arrivals)
        local_failures += int(len(rec.arrivals) - rec.local_checks_ok.sum())
        if rec.mass_error > 1e-9:
            mass_violations.append(rec.t)

    noiseless = noise_energy(trace.config.noise) == 0.0
    budget = (
        check_noiseless_budget(trace, profile, checkpoints) if noiseless else []
    )
    potentials = (
        check_potential_steps(trace, profile)
        if noiseless and trace.config.weighting == "uniform"
        else None
    )
    window = check_window_permanence(trace, profile.tau) if noiseless else None
    return TraceChecks(
        local_failures=local_failures,
        local_pairs=local_pairs,
        mass_violations=mass_violations,
        budget_violations=budget,
        potential_violations=potentials,
        window_violations=window,
    )


# ---------------------------------------------------------------------------
# Monte Carlo replication

@dataclass
class ReplicaStats:
    index: int
    cum_at_checkpoints: np.ndarray
    first_correct: int | None
    stabilization: int | None
    certified: bool
    residual_progress: float
    residual_norm: float
    checks: TraceChecks


@dataclass
class MonteCarloSummary:
    config: RunConfig
    reps: int
    checkpoints: tuple[int, ...]
    margin: float
    radius: float
    staleness_factor: float
    mean_cum: np.ndarray
    se_cum: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bounds: np.ndarray
    mean_first_correct: float
    first_correct_censored: int
    mean_stabilization_certified: float
    stabilization_censored: int
    residual_progress: tuple[float, float]  # (mean, se) across replicas
    residual_norm: tuple[float, float]
    local_failures: int
    local_pairs: int
    mass_violations: int
    budget_violations: int
    potential_violations: int
    window_violations: int
    stabilization_bound: tuple[float, float] | None
    first_trace: RunTrace | None = field(default=None, repr=False)

    @property
    def censored_fraction(self) -> float:
        return self.stabilization_censored / self.reps

    @property
    def pathwise_ok(self) -> bool:
        return (
            self.local_failures == 0
            and self.mass_violations == 0
            and self.budget_violations == 0
            and self.potential_violations == 0
            and self.window_violations == 0
        )

    @property
    def rate_eventually_decreasing(self) -> bool:
        """Mean mistakes per round decreasing over the last two checkpoints."""
        if len(self.checkpoints) < 2:
            return True
        rates = self.mean_cum / np.asarray(self.checkpoints, dtype=np.float64)
        return bool(rates[-1] <= rates[-2])


def _replica_config(config: RunConfig, index: int) -> RunConfig:
    seed = derive_key(config.seed, REPLICA, index)
    order = config.seed if config.order_seed is None else config.order_seed
    return replace(config, seed=seed, reps=1, order_seed=order)


def _replica(config: RunConfig, dataset: Dataset, checkpoints, profile, index: int) -> "ReplicaStats":
    trace = run(_replica_config(config, index), dataset)
    return _stats_from_trace(trace, profile, checkpoints, index)


def _stats_from_trace(trace: RunTrace, profile, checkpoints, index: int) -> ReplicaStats:
    stops = extract_stop_times(trace)
    res_a, res_b = mixing_residuals(trace, profile)
    return ReplicaStats(
        index=index,
        cum_at_checkpoints=trace.cum_weighted[list(checkpoints)].copy(),
        first_correct=stops.first_correct,
        stabilization=stops.stabilization,
        certified=stops.certified,
        residual_progress=res_a,
        residual_norm=res_b,
        checks=verify_trace(trace, profile, checkpoints),
    )


def _replica_task(args):
    return _replica(*args)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    mean = float(values.mean()) if n else 0.0
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def monte_carlo(
    config: RunConfig,
    reps: int | None = None,
    jobs: int = 1,
    dataset: Dataset | None = None,
    keep_first_trace: bool = False,
) -> MonteCarloSummary:
    """Run independent replicas with derived seeds and merge their statistics.

    The merge is keyed by replica index, so the summary does not depend on
    the number of worker processes.
    """
    config.validate()
    reps = config.reps if reps is None else reps
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    if dataset is None:
        dataset = config.data.build()
    profile = StalenessProfile(config.profile)
    checkpoints = resolve_checkpoints(config.horizon, config.checkpoints)

    stats: list[ReplicaStats] = []
    first_trace = None
    indices = list(range(reps))
    if keep_first_trace:
        first_trace = run(_replica_config(config, 0), dataset)
        stats.append(_stats_from_trace(first_trace, profile, checkpoints, 0))
        indices = indices[1:]

    if jobs > 1 and indices:
        tasks = [(config, dataset, checkpoints, profile, r) for r in indices]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            stats.extend(pool.map(_replica_task, tasks, chunksize=8))
    else:
        stats.extend(_replica(config, dataset, checkpoints, profile, r) for r in indices)
    stats.sort(key=lambda s: s.index)

    horizon = config.horizon
    cum = np.array([s.cum_at_checkpoints for s in stats])  # (reps, n_ck)
    n_ck = len(checkpoints)
    mean_cum = cum.mean(axis=0) if n_ck else np.empty(0)
    if reps > 1 and n_ck:
        se_cum = cum.std(axis=0, ddof=1) / math.sqrt(reps)
    else:
        se_cum = np.zeros(n_ck)
    v = noise_energy(config.noise)
    bounds = np.array(
        [
            weighted_mistake_bound(
                profile.staleness_factor, dataset.certified_radius, dataset.certified_margin, ck, v
            )
            for ck in checkpoints
        ]
    )

    # censored first-correct times count at the horizon (a floor on the truth)
    hit_vals = np.array(
        [float(s.first_correct) if s.first_correct is not None else float(horizon) for s in stats]
    )
    hit_censored = sum(1 for s in stats if s.first_correct is None)
    certified_vals = np.array(
        [float(s.stabilization) for s in stats if s.certified], dtype=np.float64
    )
    stab_censored = sum(1 for s in stats if not s.certified)
    mean_stab = float(certified_vals.mean()) if certified_vals.size else float("nan")

    res_a, se_a = _mean_se(np.array([s.residual_progress for s in stats]))
    res_b, se_b = _mean_se(np.array([s.residual_norm for s in stats]))

    try:
        floor = lower_bound_fresh_prob(config.policy)
        stab_bound = stabilization_bounds(
            profile.staleness_factor,
            dataset.certified_radius,
            dataset.certified_margin,
            float(profile.weights[0]),
            floor,
            profile.tau,
        )
    except (ConfigError, ValueError):
        stab_bound = None

    return MonteCarloSummary(
        config=config,
        reps=reps,
        checkpoints=checkpoints,
        margin=dataset.certified_margin,
        radius=dataset.certified_radius,
        staleness_factor=profile.staleness_factor,
        mean_cum=mean_cum,
        se_cum=se_cum,
        ci_lo=mean_cum - 1.96 * se_cum,
        ci_hi=mean_cum + 1.96 * se_cum,
        bounds=bounds,
        mean_first_correct=float(hit_vals.mean()) if stats else float("nan"),
        first_correct_censored=hit_censored,
        mean_stabilization_certified=mean_stab,
        stabilization_censored=stab_censored,
        residual_progress=(res_a, se_a),
        residual_norm=(res_b, se_b),
        local_failures=sum(s.checks.local_failures for s in stats),
        local_pairs=sum(s.checks.local_pairs for s in stats),
        mass_violations=sum(len(s.checks.mass_violations) for s in stats),
        budget_violations=sum(len(s.checks.budget_violations) for s in stats),
        potential_violations=sum(len(s.checks.potential_violations or []) for s in stats),
        window_violations=sum(len(s.checks.window_violations or []) for s in stats),
        stabilization_bound=stab_bound,
        first_trace=first_trace,
    )


# ---------------------------------------------------------------------------
# CSV export

def _fmt(x) -> str:
    return repr(float(x))


def write_trace_csv(trace: RunTrace, profile: StalenessProfile, path) -> None:
    """Per-round trace table; K_t is the running total through round t."""
    phi, psi = compute_potentials(trace, profile)
    lines = ["t,n_arrivals,kappa,K_t,a_t,b_t,phi_t,psi_t,correct"]
    for rec in trace.rounds:
        t = rec.t
        lines.append(
            ",".join(
                [
                    str(t),
                    str(len(rec.arrivals)),
                    _fmt(rec.weighted_mistakes),
                    _fmt(trace.cum_weighted[t + 1]),
                    _fmt(trace.progress[t]),
                    _fmt(trace.sq_norm[t]),
                    _fmt(phi[t]),
                    _fmt(psi[t]),
                    str(int(rec.correct)),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def write_summary_csv(summary: MonteCarloSummary, path) -> None:
    """One row per checkpoint horizon with replica statistics and the bound."""
    lines = ["A,mean_KA,se_KA,bound_thm1,mean_Thit,mean_Tstab,censored_frac"]
    for i, ck in enumerate(summary.checkpoints):
        lines.append(
            ",".join(
                [
                    str(ck),
                    _fmt(summary.mean_cum[i]),
                    _fmt(summary.se_cum[i]),
                    _fmt(summary.bounds[i]),
                    _fmt(summary.mean_first_correct),
                    _fmt(summary.mean_stabilization_certified),
                    _fmt(summary.censored_fraction),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
