import numpy as np
import pytest

from stalemix.dataset import (
    Dataset,
    certify,
    generate_dataset,
    is_globally_correct,
    load_dataset,
    save_dataset,
)
from stalemix.errors import CertificationError, GenerationBudgetError


def make_dataset(points, witness):
    """Hand-built single-client dataset from [(x, y), ...]."""
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    ds = Dataset([xs], [ys], np.asarray(witness, dtype=np.float64), 0.0, 0.0)
    ds.certified_margin, ds.certified_radius = certify(ds)
    return ds


def test_one_dim_single_example_region():
    # with margin 0.5 and radius 1 the accepted region is 0.5 <= |x| <= 1
    ds = generate_dataset(1, 1, 1, 0.5, 1.0, seed=42)
    x = ds.client_x[0][0, 0]
    y = ds.client_y[0][0]
    assert 0.5 <= abs(x) <= 1.0
    assert y * ds.witness[0] * x >= 0.5


def test_generate_postconditions():
    ds = generate_dataset(2, 2, 50, 0.1, 1.0, seed=7)
    assert ds.num_clients == 2
    assert all(x.shape == (50, 2) for x in ds.client_x)
    assert ds.num_examples == 100
    margin, radius = certify(ds)
    assert margin >= 0.1
    assert radius <= 1.0
    assert margin == ds.certified_margin
    assert radius == ds.certified_radius


def test_generate_determinism():
    a = generate_dataset(3, 2, 10, 0.2, 1.0, seed=99)
    b = generate_dataset(3, 2, 10, 0.2, 1.0, seed=99)
    assert np.array_equal(a.witness, b.witness)
    for xa, xb in zip(a.client_x, b.client_x):
        assert np.array_equal(xa, xb)
    c = generate_dataset(3, 2, 10, 0.2, 1.0, seed=100)
    assert not np.array_equal(a.witness, c.witness)


def test_rejection_budget_error():
    # Oracle first: Monte Carlo estimate of the acceptance probability for a
    # margin of 0.99 at radius 1 in 10 dimensions.  The band |<w,x>| >= 0.99
    # of the unit ball is vanishingly small.
    rng = np.random.default_rng(123)
    n, d = 200_000, 10
    g = rng.standard_normal((n, d))
    pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    pts *= rng.random((n, 1)) ** (1.0 / d)
    p_accept = float(np.mean(np.abs(pts[:, 0]) >= 0.99))
    assert p_accept < 1e-4  # so 1e4 attempts fail with overwhelming probability
    with pytest.raises(GenerationBudgetError):
        generate_dataset(d, 1, 1, 0.99, 1.0, seed=1, max_attempts_per_example=10_000)


def test_generate_argument_validation():
    with pytest.raises(ValueError):
        generate_dataset(0, 1, 1, 0.1, 1.0, seed=0)
    with pytest.raises(ValueError):
        generate_dataset(2, 1, 1, 1.0, 1.0, seed=0)  # margin not < radius
    with pytest.raises(ValueError):
        generate_dataset(2, 1, 1, 1.5, 1.0, seed=0)
    with pytest.raises(ValueError):
        generate_dataset(2, 0, 1, 0.1, 1.0, seed=0)


def test_certify_hand_examples():
    ds = make_dataset([((1.0, 0.0), 1.0), ((-1.0, 0.0), -1.0)], (1.0, 0.0))
    assert certify(ds) == (1.0, 1.0)
    ds = make_dataset([((0.3, 0.0), 1.0)], (1.0, 0.0))
    margin, radius = certify(ds)
    assert margin == pytest.approx(0.3)
    assert radius == pytest.approx(0.3)


def test_certify_rejects_nonseparating_witness():
    with pytest.raises(CertificationError):
        make_dataset([((0.5, 0.0), -1.0)], (1.0, 0.0))


def test_certify_rejects_nonunit_witness():
    xs = np.array([[0.5, 0.0]])
    ys = np.array([1.0])
    ds = Dataset([xs], [ys], np.array([2.0, 0.0]), 0.0, 0.0)
    with pytest.raises(CertificationError):
        certify(ds)


def test_globally_correct_predicate():
    ds = generate_dataset(4, 2, 10, 0.2, 1.0, seed=5)
    for scale in (0.5, 1.0, 7.3):
        assert is_globally_correct(scale * ds.witness, ds)
    assert not is_globally_correct(np.zeros(4), ds)
    assert not is_globally_correct(-ds.witness, ds)
    with pytest.raises(ValueError):
        is_globally_correct(np.zeros(3), ds)


def test_generated_invariants_random():
    rng = np.random.default_rng(0)
    for _ in range(10):
        dim = int(rng.integers(1, 6))
        ds = generate_dataset(
            dim,
            int(rng.integers(1, 4)),
            int(rng.integers(1, 8)),
            float(rng.uniform(0.05, 0.4)),
            1.0,
            seed=int(rng.integers(0, 2**31)),
        )
        x, y = ds.stacked()
        assert np.all(np.isin(y, (-1.0, 1.0)))
        assert np.all(y * (x @ ds.witness) >= ds.certified_margin)
        assert np.all(np.linalg.norm(x, axis=1) <= ds.certified_radius + 1e-12)
        assert abs(np.linalg.norm(ds.witness) - 1.0) <= 1e-9


def test_label_skew_partition():
    bal = generate_dataset(2, 4, 25, 0.1, 1.0, seed=21, partition="balanced")
    skw = generate_dataset(2, 4, 25, 0.1, 1.0, seed=21, partition="label_skew")
    assert all(x.shape[0] == 25 for x in skw.client_x)
    # same multiset overall, redistributed
    assert sorted(map(float, np.concatenate(bal.client_y))) == sorted(
        map(float, np.concatenate(skw.client_y))
    )
    # skewed partition orders negatives first, so client 0 is -1-heavy
    first, last = skw.client_y[0], skw.client_y[-1]
    assert first.mean() < last.mean()


def test_serialization_roundtrip(tmp_path):
    ds = generate_dataset(3, 2, 7, 0.15, 1.0, seed=13)
    path = tmp_path / "data.txt"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.certified_margin == ds.certified_margin
    assert back.certified_radius == ds.certified_radius
    assert np.array_equal(back.witness, ds.witness)
    for xa, xb, ya, yb in zip(ds.client_x, back.client_x, ds.client_y, back.client_y):
        assert np.array_equal(xa, xb)
        assert np.array_equal(ya, yb)


def test_serialization_rejects_corrupt_certificate(tmp_path):
    ds = generate_dataset(2, 1, 4, 0.2, 1.0, seed=3)
    path = tmp_path / "data.txt"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    head = lines[0].split()
    head[2] = repr(float(head[2]) * 2.0)
    path.write_text("\n".join([" ".join(head)] + lines[1:]) + "\n")
    with pytest.raises(ValueError):
        load_dataset(path)
