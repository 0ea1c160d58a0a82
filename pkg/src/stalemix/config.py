"""Experiment configuration: a sectioned key-value text file.

Every field has a default; `serialize_config` writes the fully resolved
configuration, and `parse_config(serialize_config(cfg)) == cfg` holds for
any valid configuration (the resolved file is echoed into output
directories for provenance).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

from .channel import NoiseModel
from .engine import DataSpec, RunConfig
from .errors import ConfigError
from .scheduler import SchedulePolicy, load_script


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    sweep_profiles: tuple[tuple[float, ...], ...] = ()
    sweep_noise_energies: tuple[float, ...] = ()
    sweep_horizons: tuple[int, ...] = ()


_SECTIONS = {
    "dataset": (
        "dim",
        "num_clients",
        "examples_per_client",
        "target_margin",
        "radius",
        "seed",
        "partition",
        "path",
    ),
    "profile": ("weights",),
    "schedule": (
        "kind",
        "tau_dl",
        "tau_ul",
        "participation_prob",
        "fresh_prob",
        "allow_multiple_inflight",
        "script",
    ),
    "noise": ("family", "sigma2_dl", "sigma2_ul"),
    "run": ("horizon", "weighting", "seed", "reps", "epochs", "checkpoints"),
    "sweep": ("profiles", "noise_energies", "horizons"),
}


def _get(cp, section, key, default):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    return default


def _bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: {raw!r} is not a boolean")


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    try:
        data = DataSpec(
            dim=int(_get(cp, "dataset", "dim", "2")),
            num_clients=int(_get(cp, "dataset", "num_clients", "1")),
            examples_per_client=int(_get(cp, "dataset", "examples_per_client", "10")),
            target_margin=float(_get(cp, "dataset", "target_margin", "0.1")),
            radius=float(_get(cp, "dataset", "radius", "1.0")),
            seed=int(_get(cp, "dataset", "seed", "0")),
            partition=_get(cp, "dataset", "partition", "balanced"),
            path=_get(cp, "dataset", "path", "") or None,
        )

        kind = _get(cp, "schedule", "kind", "always_fresh")
        script_path = _get(cp, "schedule", "script", "") or None
        script = load_script(script_path) if script_path else ()
        policy = SchedulePolicy(
            kind=kind,
            tau_dl=int(_get(cp, "schedule", "tau_dl", "0")),
            tau_ul=int(_get(cp, "schedule", "tau_ul", "0")),
            participation_prob=float(_get(cp, "schedule", "participation_prob", "1.0")),
            fresh_prob=float(_get(cp, "schedule", "fresh_prob", "0.0")),
            allow_multiple_inflight=_bool(
                _get(cp, "schedule", "allow_multiple_inflight", "false"),
                "[schedule] allow_multiple_inflight",
            ),
            script=script,
            script_path=script_path,
        )

        noise = NoiseModel(
            family=_get(cp, "noise", "family", "none"),
            sigma2_dl=float(_get(cp, "noise", "sigma2_dl", "0.0")),
            sigma2_ul=float(_get(cp, "noise", "sigma2_ul", "0.0")),
        )

        default_weights = ",".join(["1.0"] + ["0.0"] * policy.tau)
        run_cfg = RunConfig(
            data=data,
            profile=_floats(_get(cp, "profile", "weights", default_weights)),
            policy=policy,
            noise=noise,
            weighting=_get(cp, "run", "weighting", "uniform"),
            horizon=int(_get(cp, "run", "horizon", "100")),
            seed=int(_get(cp, "run", "seed", "0")),
            reps=int(_get(cp, "run", "reps", "1")),
            epochs=int(_get(cp, "run", "epochs", "1")),
            checkpoints=_ints(_get(cp, "run", "checkpoints", "")),
        )

        profiles_raw = _get(cp, "sweep", "profiles", "")
        sweep_profiles = tuple(
            _floats(chunk) for chunk in profiles_raw.split(";") if chunk.strip()
        )
        sweep = ExperimentConfig(
            run=run_cfg,
            sweep_profiles=sweep_profiles,
            sweep_noise_energies=_floats(_get(cp, "sweep", "noise_energies", "")),
            sweep_horizons=_ints(_get(cp, "sweep", "horizons", "")),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc

    run_cfg.validate()
    return sweep


def serialize_config(cfg: ExperimentConfig) -> str:
    run, data, policy, noise = cfg.run, cfg.run.data, cfg.run.policy, cfg.run.noise
    cp = configparser.ConfigParser(interpolation=None)
    cp["dataset"] = {
        "dim": str(data.dim),
        "num_clients": str(data.num_clients),
        "examples_per_client": str(data.examples_per_client),
        "target_margin": repr(data.target_margin),
        "radius": repr(data.radius),
        "seed": str(data.seed),
        "partition": data.partition,
        "path": data.path or "",
    }
    cp["profile"] = {"weights": ", ".join(repr(w) for w in run.profile)}
    cp["schedule"] = {
        "kind": policy.kind,
        "tau_dl": str(policy.tau_dl),
        "tau_ul": str(policy.tau_ul),
        "participation_prob": repr(policy.participation_prob),
        "fresh_prob": repr(policy.fresh_prob),
        "allow_multiple_inflight": str(policy.allow_multiple_inflight).lower(),
        "script": policy.script_path or "",
    }
    cp["noise"] = {
        "family": noise.family,
        "sigma2_dl": repr(noise.sigma2_dl),
        "sigma2_ul": repr(noise.sigma2_ul),
    }
    cp["run"] = {
        "horizon": str(run.horizon),
        "weighting": run.weighting,
        "seed": str(run.seed),
        "reps": str(run.reps),
        "epochs": str(run.epochs),
        "checkpoints": ", ".join(str(c) for c in run.checkpoints),
    }
    cp["sweep"] = {
        "profiles": " ; ".join(
            ", ".join(repr(w) for w in prof) for prof in cfg.sweep_profiles
        ),
        "noise_energies": ", ".join(repr(v) for v in cfg.sweep_noise_energies),
        "horizons": ", ".join(str(h) for h in cfg.sweep_horizons),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def apply_overrides(cfg: ExperimentConfig, seed=None, reps=None) -> ExperimentConfig:
    """Return cfg with CLI/environment overrides applied to the run section."""
    run = cfg.run
    if seed is not None:
        run = replace(run, seed=int(seed))
    if reps is not None:
        run = replace(run, reps=int(reps))
    return replace(cfg, run=run) if run is not cfg.run else cfg
