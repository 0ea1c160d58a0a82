"""Command-line entry point: gen-data, run, sweep, profile-design, self-test.

Exit codes: 0 all checks passed; 2 configuration error; 3 I/O error;
4 pathwise invariant violated; 5 statistical check failed.
"""
from __future__ import annotations

import argparse
import filecmp
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._streams import derive_key
from .aggregator import (
    StalenessProfile,
    assign_weights,
    bucketize,
    check_mixing_identity,
    design_profile,
)
from .channel import NoiseModel, noise_energy, perturb
from .config import (
    ExperimentConfig,
    apply_overrides,
    load_config,
    serialize_config,
)
from .dataset import save_dataset
from .engine import (
    MonteCarloSummary,
    check_potential_steps,
    monte_carlo,
    resolve_checkpoints,
    run as run_trace,
    write_summary_csv,
    write_trace_csv,
)
from .errors import ConfigError, InvariantViolation, StalemixError
from .scheduler import ArrivalEvent, SchedulePolicy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4
EXIT_STATISTICAL = 5


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stalemix",
        description="Simulate and verify a stale-update distributed perceptron.",
    )
    p.add_argument("--version", action="version", version=f"stalemix {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--seed", type=int, default=None, help="override run seed")
        sp.add_argument("--reps", type=int, default=None, help="override replica count")
        sp.add_argument("--jobs", type=int, default=1, help="parallel replica workers")
        if out:
            sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("gen-data", help="generate and write a certified dataset")
    common(sp)

    sp = sub.add_parser("run", help="run replicas, write trace/summary CSVs, verify")
    common(sp)
    sp.add_argument(
        "--corrupt-round",
        type=int,
        default=None,
        help="inflate the recorded mistake weight at this round (checker sensitivity demo)",
    )

    sp = sub.add_parser("sweep", help="run the profile x noise grid, write long CSV")
    common(sp)

    sp = sub.add_parser("profile-design", help="profile of minimal mean staleness")
    sp.add_argument(
        "--frequencies",
        required=True,
        help="comma-separated per-staleness occupancy frequencies in [0,1]",
    )
    sp.add_argument("--threshold", type=float, default=0.5)

    sp = sub.add_parser("self-test", help="built-in checker sanity suite")
    sp.add_argument("--jobs", type=int, default=1)
    return p


def _out_dir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get("STALEMIX_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else os.environ.get("STALEMIX_SEED")
    return apply_overrides(cfg, seed=seed, reps=args.reps)


def cmd_gen_data(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    spec = replace(cfg.run.data, path=None)
    ds = spec.build()
    path = out / "dataset.txt"
    save_dataset(ds, path)
    (out / "config.ini").write_text(serialize_config(cfg), encoding="utf-8")
    print(f"wrote {path}")
    print(f"certified margin={ds.certified_margin!r} radius={ds.certified_radius!r}")
    return EXIT_OK


def _print_verdicts(summary: MonteCarloSummary) -> tuple[bool, bool]:
    """Emit one PASS/FAIL/SKIP line per check; returns (pathwise_ok, stats_ok)."""
    noiseless = noise_energy(summary.config.noise) == 0.0
    path_ok = True

    def line(name, ok, detail=""):
        nonlocal path_ok
        status = "PASS" if ok else "FAIL"
        if not ok:
            path_ok = False
        print(f"check {name}: {status}{' ' + detail if detail else ''}")

    line(
        "local_progress",
        summary.local_failures == 0,
        f"({summary.local_failures} failures / {summary.local_pairs} pairs)",
    )
    line("aggregation_mass", summary.mass_violations == 0, f"({summary.mass_violations} rounds)")
    if noiseless:
        line(
            "noiseless_budget",
            summary.budget_violations == 0,
            f"({summary.budget_violations} checkpoints)",
        )
        line(
            "potential_steps",
            summary.potential_violations == 0,
            f"({summary.potential_violations} rounds)",
        )
        line(
            "window_permanence",
            summary.window_violations == 0,
            f"({summary.window_violations} rounds)",
        )
    else:
        print("check noiseless_budget: SKIP (noisy run)")
        print("check potential_steps: SKIP (noisy run)")
        print("check window_permanence: SKIP (noisy run)")

    stats_ok = True
    if not noiseless and summary.reps >= 2:
        within = bool(
            np.all(summary.mean_cum - 2.0 * summary.se_cum <= summary.bounds)
        )
        if not within:
            stats_ok = False
        print(
            f"check expected_bound: {'PASS' if within else 'FAIL'} "
            f"(mean-2SE vs bound at {len(summary.checkpoints)} checkpoints)"
        )
        ra, sa = summary.residual_progress
        rb, sb = summary.residual_norm
        res_ok = ra >= -3.0 * sa and rb >= -3.0 * sb
        if not res_ok:
            stats_ok = False
        print(
            f"check recursion_residuals: {'PASS' if res_ok else 'FAIL'} "
            f"(progress {ra:.3g}±{sa:.3g}, norm {rb:.3g}±{sb:.3g})"
        )
        rate_ok = summary.rate_eventually_decreasing
        if not rate_ok:
            stats_ok = False
        print(f"check vanishing_rate: {'PASS' if rate_ok else 'FAIL'}")
    else:
        print("check expected_bound: SKIP " + ("(noiseless)" if noiseless else "(reps < 2)"))
        print("check recursion_residuals: SKIP")
        print("check vanishing_rate: SKIP")

    if summary.stabilization_bound is not None:
        hit_b, stab_b = summary.stabilization_bound
        print(
            f"stabilization bounds: mean first-correct {summary.mean_first_correct:.2f} "
            f"(bound {hit_b:.2f}), mean certified stabilization "
            f"{summary.mean_stabilization_certified:.2f} (bound {stab_b:.2f}), "
            f"censored {summary.censored_fraction:.3f}"
        )
    return path_ok, stats_ok


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    run_cfg = cfg.run
    summary = monte_carlo(run_cfg, jobs=args.jobs, keep_first_trace=True)
    profile = StalenessProfile(run_cfg.profile)

    write_trace_csv(summary.first_trace, profile, out / "trace.csv")
    write_summary_csv(summary, out / "summary.csv")
    (out / "config.ini").write_text(serialize_config(cfg), encoding="utf-8")

    code = EXIT_OK
    if args.corrupt_round is not None:
        trace = summary.first_trace
        if not 0 <= args.corrupt_round < trace.horizon:
            raise ConfigError(f"--corrupt-round outside 0..{trace.horizon - 1}")
        trace.weighted[args.corrupt_round] += 1.0
        flagged = check_potential_steps(trace, profile)
        print(f"corruption self-test: injected at round {args.corrupt_round}, "
              f"flagged rounds {flagged}")
        print("check corruption_detected: "
              + ("PASS" if flagged == [args.corrupt_round] else "FAIL"))
        code = EXIT_INVARIANT  # the demo deliberately leaves a violating trace

    path_ok, stats_ok = _print_verdicts(summary)
    if not path_ok:
        code = EXIT_INVARIANT
    elif not stats_ok and code == EXIT_OK:
        code = EXIT_STATISTICAL
    print(f"outputs in {out}")
    return code


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    profiles = cfg.sweep_profiles or (cfg.run.profile,)
    energies = cfg.sweep_noise_energies or (noise_energy(cfg.run.noise),)
    horizons = cfg.sweep_horizons or resolve_checkpoints(cfg.run.horizon, cfg.run.checkpoints)
    if not horizons:
        raise ConfigError("sweep needs at least one horizon")
    tau = cfg.run.policy.tau
    for prof in profiles:
        if len(prof) != tau + 1:
            raise ConfigError(f"sweep profile {prof} does not have length tau+1={tau + 1}")
    family = cfg.run.noise.family
    if any(v > 0 for v in energies) and family == "none":
        raise ConfigError("sweeping noise energies needs a [noise] family other than 'none'")

    horizon = max(horizons)
    checkpoints = tuple(sorted(horizons))
    dataset = cfg.run.data.build()
    lines = ["profile,s_bar,V,A,mean_KA,se_KA,bound_thm1"]
    path_ok = True
    stats_ok = True
    for prof in profiles:
        label = "|".join(repr(w) for w in prof)
        s_bar = StalenessProfile(prof).mean_staleness
        for v in energies:
            noise = (
                NoiseModel("none")
                if v == 0.0
                else NoiseModel(family, sigma2_dl=v / 2.0, sigma2_ul=v / 2.0)
            )
            cell = replace(
                cfg.run,
                profile=tuple(prof),
                noise=noise,
                horizon=horizon,
                checkpoints=checkpoints,
            )
            summary = monte_carlo(cell, jobs=args.jobs, dataset=dataset)
            if not summary.pathwise_ok:
                path_ok = False
            if v > 0 and summary.reps >= 2:
                if not np.all(summary.mean_cum - 2.0 * summary.se_cum <= summary.bounds):
                    stats_ok = False
            for i, ck in enumerate(summary.checkpoints):
                lines.append(
                    ",".join(
                        [
                            label,
                            repr(s_bar),
                            repr(float(v)),
                            str(ck),
                            repr(float(summary.mean_cum[i])),
                            repr(float(summary.se_cum[i])),
                            repr(float(summary.bounds[i])),
                        ]
                    )
                )
            print(f"cell profile=({label}) V={v}: mean K at {checkpoints} = "
                  + ", ".join(f"{m:.2f}" for m in summary.mean_cum))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "config.ini").write_text(serialize_config(cfg), encoding="utf-8")
    print(f"wrote {out / 'sweep.csv'} ({len(lines) - 1} rows)")
    if not path_ok:
        return EXIT_INVARIANT
    return EXIT_OK if stats_ok else EXIT_STATISTICAL


def cmd_profile_design(args) -> int:
    freqs = [float(v) for v in args.frequencies.split(",") if v.strip()]
    profile, fallback = design_profile(freqs, args.threshold)
    if fallback:
        print(
            "warning: no staleness bucket is reliably occupied at threshold "
            f"{args.threshold}; falling back to the uniform profile",
            file=sys.stderr,
        )
    print("weights: " + ", ".join(repr(float(w)) for w in profile.weights))
    print(f"mean_staleness: {profile.mean_staleness!r}")
    return EXIT_OK


def _selftest_identity() -> bool:
    rng = np.random.Generator(np.random.Philox(key=20260811))
    for _ in range(1000):
        tau = int(rng.integers(0, 5))
        weights = rng.random(tau + 1) + 1e-3
        profile = StalenessProfile(weights / weights.sum())
        events = []
        for s in range(tau + 1):
            for _ in range(int(rng.integers(0, 4))):
                events.append(ArrivalEvent(0, 0, s, 0, s))
        buckets = bucketize(events, tau)
        assignment = assign_weights(buckets, profile)
        series = rng.standard_normal(tau + 1) * 10.0
        if not check_mixing_identity(assignment, buckets, series, profile):
            return False
    return True


def _selftest_moments() -> bool:
    n, dim = 20000, 8
    for family in ("gaussian_isotropic", "sphere_uniform"):
        base = np.zeros(dim)
        draws = np.stack(
            [perturb(base, 1.0, family, derive_key(7, 0xC0, i)) for i in range(n)]
        )
        if abs(float((draws**2).sum(axis=1).mean()) - 1.0) > 0.05:
            return False
        if np.any(np.abs(draws.mean(axis=0)) > 5.0 / np.sqrt(n)):
            return False
    return True


def _small_config() -> ExperimentConfig:
    from .engine import DataSpec, RunConfig

    policy = SchedulePolicy(
        kind="bernoulli_uniform",
        tau_dl=1,
        tau_ul=1,
        participation_prob=0.7,
        fresh_prob=0.3,
    )
    run_cfg = RunConfig(
        data=DataSpec(dim=3, num_clients=3, examples_per_client=6, target_margin=0.2, seed=11),
        profile=(0.5, 0.3, 0.2),
        policy=policy,
        horizon=120,
        seed=5,
    )
    return ExperimentConfig(run=run_cfg)


def _selftest_corruption() -> bool:
    cfg = _small_config().run
    trace = run_trace(cfg)
    profile = StalenessProfile(cfg.profile)
    if check_potential_steps(trace, profile):
        return False
    quiet = [t for t in range(trace.horizon) if trace.weighted[t] == 0.0]
    if not quiet:
        return False
    target = quiet[-1]
    trace.weighted[target] += 1.0
    return check_potential_steps(trace, profile) == [target]


def _selftest_determinism(jobs: int) -> bool:
    cfg = _small_config()
    profile = StalenessProfile(cfg.run.profile)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for tag in ("a", "b"):
            summary = monte_carlo(cfg.run, reps=3, jobs=jobs if tag == "b" else 1,
                                  keep_first_trace=True)
            trace_path = Path(tmp) / f"trace_{tag}.csv"
            sum_path = Path(tmp) / f"summary_{tag}.csv"
            write_trace_csv(summary.first_trace, profile, trace_path)
            write_summary_csv(summary, sum_path)
            paths.append((trace_path, sum_path))
        return filecmp.cmp(paths[0][0], paths[1][0], shallow=False) and filecmp.cmp(
            paths[0][1], paths[1][1], shallow=False
        )


def cmd_self_test(args) -> int:
    checks = [
        ("mixing_identity", _selftest_identity),
        ("channel_moments", _selftest_moments),
        ("corruption_sensitivity", _selftest_corruption),
        ("determinism", lambda: _selftest_determinism(max(args.jobs, 2))),
    ]
    ok = True
    for name, fn in checks:
        passed = fn()
        ok = ok and passed
        print(f"self-test {name}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INVARIANT


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "gen-data": cmd_gen_data,
        "run": cmd_run,
        "sweep": cmd_sweep,
        "profile-design": cmd_profile_design,
        "self-test": cmd_self_test,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StalemixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
