"""Additive link noise with zero mean and exact second moment.

Two families: gaussian_isotropic (unbounded, i.i.d. coordinates) and
sphere_uniform (uniform direction at fixed length, so the energy bound holds
almost surely, not just in expectation).  Draws are addressed by a stream
key, never by shared RNG state, so a noise vector depends only on
(link, client, round, seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import add_scaled_normals
from ._streams import normals
from .errors import ConfigError

FAMILIES = ("none", "gaussian_isotropic", "sphere_uniform")


@dataclass(frozen=True)
class NoiseModel:
    family: str = "none"
    sigma2_dl: float = 0.0
    sigma2_ul: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown noise family {self.family!r}")
        if self.sigma2_dl < 0.0 or self.sigma2_ul < 0.0:
            raise ConfigError("noise energies must be nonnegative")
        if self.family == "none" and (self.sigma2_dl > 0.0 or self.sigma2_ul > 0.0):
            raise ConfigError("family 'none' requires zero noise energies")


def noise_energy(model: NoiseModel) -> float:
    """Total per-round noise energy (downlink plus uplink second moments)."""
    return model.sigma2_dl + model.sigma2_ul


def perturb(v: np.ndarray, sigma2: float, family: str, stream_key: int) -> np.ndarray:
    """Return v plus a noise draw with E[n] = 0 and E[|n|^2] = sigma2 exactly.

    sigma2 == 0 (or family "none") returns v itself, unperturbed.
    """
    if sigma2 < 0.0:
        raise ValueError("sigma2 must be nonnegative")
    if sigma2 == 0.0 or family == "none":
        return v
    dim = v.shape[0]
    if family == "gaussian_isotropic":
        return add_scaled_normals(v, np.uint64(stream_key), math.sqrt(sigma2 / dim))
    g = normals(stream_key, dim)
    if family == "sphere_uniform":
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:  # measure-zero guard
            g = np.zeros(dim)
            g[0] = 1.0
            nrm = 1.0
        return v + g * (math.sqrt(sigma2) / nrm)
    raise ConfigError(f"unknown noise family {family!r}")
