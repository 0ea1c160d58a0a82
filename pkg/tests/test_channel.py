import numpy as np
import pytest

from stalemix._streams import DOWNLINK, UPLINK, derive_key
from stalemix.channel import FAMILIES, NoiseModel, noise_energy, perturb
from stalemix.errors import ConfigError


def test_zero_noise_is_identity():
    v = np.array([1.0, -2.0, 3.0])
    for family in FAMILIES:
        out = perturb(v, 0.0, family, derive_key(1, 2))
        assert np.array_equal(out, v)
    out = perturb(v, 4.0, "none", derive_key(1, 2))
    assert np.array_equal(out, v)


def test_sphere_has_exact_norm_every_draw():
    v = np.zeros(6)
    for i in range(200):
        n = perturb(v, 4.0, "sphere_uniform", derive_key(9, i))
        assert np.linalg.norm(n) == pytest.approx(2.0, abs=1e-12)


def test_gaussian_second_moment_monte_carlo():
    # Monte Carlo check of E[|n|^2] = sigma2; with 1e5 draws of a chi-square
    # average the estimate concentrates well inside +-3%.
    dim, sigma2, n = 10, 1.0, 100_000
    total = 0.0
    v = np.zeros(dim)
    for i in range(n):
        d = perturb(v, sigma2, "gaussian_isotropic", derive_key(77, i))
        total += float(d @ d)
    assert 0.97 <= total / n <= 1.03


def test_zero_mean_componentwise():
    dim, n = 8, 30_000
    v = np.zeros(dim)
    for family in ("gaussian_isotropic", "sphere_uniform"):
        acc = np.zeros(dim)
        for i in range(n):
            acc += perturb(v, 1.0, family, derive_key(5, i))
        mean = acc / n
        se = np.sqrt(1.0 / dim / n)
        assert np.all(np.abs(mean) <= 4.0 * se)


def test_noise_depends_only_on_key_not_input():
    key = derive_key(3, DOWNLINK, 2, 14)
    a = perturb(np.zeros(5), 0.5, "gaussian_isotropic", key)
    b = perturb(np.ones(5), 0.5, "gaussian_isotropic", key)
    np.testing.assert_allclose(a, b - 1.0, atol=1e-12)
    other = perturb(np.zeros(5), 0.5, "gaussian_isotropic", derive_key(3, UPLINK, 2, 14))
    assert not np.array_equal(a, other)


def test_noise_energy():
    assert noise_energy(NoiseModel("none")) == 0.0
    assert noise_energy(NoiseModel("gaussian_isotropic", 0.5, 0.3)) == pytest.approx(0.8)
    assert noise_energy(NoiseModel("sphere_uniform", 0.0, 0.0)) == 0.0


def test_model_validation():
    with pytest.raises(ConfigError):
        NoiseModel("white")
    with pytest.raises(ConfigError):
        NoiseModel("gaussian_isotropic", -0.1, 0.0)
    with pytest.raises(ConfigError):
        NoiseModel("none", 0.1, 0.0)
    with pytest.raises(ValueError):
        perturb(np.zeros(2), -1.0, "gaussian_isotropic", 0)
