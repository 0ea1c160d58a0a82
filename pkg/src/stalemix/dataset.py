"""Margin-separable synthetic datasets partitioned across clients.

A dataset certifies its own separability: it stores a unit witness vector
and the exact margin/radius achieved by every stored example, so downstream
bound checks can use the true constants rather than generation targets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._streams import DATA, derive_key, generator
from .errors import CertificationError, GenerationBudgetError

_SAMPLE_BATCH = 512

PARTITIONS = ("balanced", "label_skew")


@dataclass(frozen=True)
class Example:
    """One labeled point; y is exactly -1 or +1."""

    x: np.ndarray
    y: float


@dataclass
class Dataset:
    client_x: list[np.ndarray]  # per client, shape (n_i, dim)
    client_y: list[np.ndarray]  # per client, shape (n_i,), values in {-1.0, +1.0}
    witness: np.ndarray  # unit vector achieving the certified margin
    certified_margin: float
    certified_radius: float
    _stacked: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def dim(self) -> int:
        return int(self.witness.shape[0])

    @property
    def num_clients(self) -> int:
        return len(self.client_x)

    @property
    def num_examples(self) -> int:
        return sum(x.shape[0] for x in self.client_x)

    def shard(self, client: int) -> tuple[np.ndarray, np.ndarray]:
        return self.client_x[client], self.client_y[client]

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """The global multiset as (X, y) arrays, clients concatenated in order."""
        if self._stacked is None:
            self._stacked = (
                np.concatenate(self.client_x, axis=0),
                np.concatenate(self.client_y, axis=0),
            )
        return self._stacked

    def examples(self):
        """Iterate (client_index, Example) over the global multiset."""
        for i, (xs, ys) in enumerate(zip(self.client_x, self.client_y)):
            for x, y in zip(xs, ys):
                yield i, Example(x, float(y))


def certify(dataset: Dataset) -> tuple[float, float]:
    """Recompute (margin, radius) of the dataset under its stored witness.

    Raises CertificationError if the witness does not strictly separate the
    data with positive margin.
    """
    x, y = dataset.stacked()
    if x.shape[0] == 0:
        raise CertificationError("empty dataset cannot be certified")
    w = dataset.witness
    wnorm = float(np.linalg.norm(w))
    if abs(wnorm - 1.0) > 1e-9:
        raise CertificationError(f"witness norm {wnorm} is not 1 within 1e-9")
    margin = float(np.min(y * (x @ w)))
    radius = float(np.max(np.linalg.norm(x, axis=1)))
    if margin <= 0.0:
        raise CertificationError(f"stored witness achieves nonpositive margin {margin}")
    return margin, radius


def _build(client_x, client_y, witness) -> Dataset:
    ds = Dataset(client_x, client_y, witness, 0.0, 0.0)
    margin, radius = certify(ds)
    ds.certified_margin = margin
    ds.certified_radius = radius
    return ds


def generate_dataset(
    dim: int,
    num_clients: int,
    examples_per_client: int,
    target_margin: float,
    radius: float,
    seed: int,
    partition: str = "balanced",
    max_attempts_per_example: int = 1_000_000,
) -> Dataset:
    """Sample a certified margin-separable dataset.

    Points are drawn uniformly from the ball of the given radius and rejected
    while their distance to the witness hyperplane is below target_margin;
    survivors are labeled by the side they fall on.  The result is a pure
    function of the arguments.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if num_clients < 1 or examples_per_client < 1:
        raise ValueError("num_clients and examples_per_client must be >= 1")
    if not (0.0 < target_margin < radius):
        raise ValueError("need 0 < target_margin < radius")
    if partition not in PARTITIONS:
        raise ValueError(f"unknown partition {partition!r}")

    rng = generator(derive_key(seed, DATA))
    w = rng.standard_normal(dim)
    w /= np.linalg.norm(w)

    total = num_clients * examples_per_client
    budget = max_attempts_per_example * total
    accepted_x: list[np.ndarray] = []
    accepted_d: list[np.ndarray] = []
    n_accepted = 0
    attempts = 0
    while n_accepted < total:
        if attempts >= budget:
            raise GenerationBudgetError(
                f"accepted {n_accepted}/{total} examples after {attempts} draws; "
                "target_margin is likely too close to radius"
            )
        g = rng.standard_normal((_SAMPLE_BATCH, dim))
        norms = np.linalg.norm(g, axis=1)
        norms[norms == 0.0] = 1.0
        r = radius * rng.random(_SAMPLE_BATCH) ** (1.0 / dim)
        pts = g * (r / norms)[:, None]
        d = pts @ w
        keep = np.abs(d) >= target_margin
        accepted_x.append(pts[keep])
        accepted_d.append(d[keep])
        n_accepted += int(keep.sum())
        attempts += _SAMPLE_BATCH

    x = np.concatenate(accepted_x, axis=0)[:total]
    y = np.sign(np.concatenate(accepted_d)[:total])

    if partition == "label_skew":
        # stable sort by label: early clients become -1-heavy, late ones +1-heavy
        idx = np.argsort(y, kind="stable")
        x, y = x[idx], y[idx]

    client_x = [
        np.ascontiguousarray(x[i * examples_per_client : (i + 1) * examples_per_client])
        for i in range(num_clients)
    ]
    client_y = [
        np.ascontiguousarray(y[i * examples_per_client : (i + 1) * examples_per_client])
        for i in range(num_clients)
    ]
    return _build(client_x, client_y, w)


def is_globally_correct(w: np.ndarray, dataset: Dataset) -> bool:
    """True iff y <w, x> > 0 strictly for every example in the global multiset."""
    if w.shape != (dataset.dim,):
        raise ValueError(f"model shape {w.shape} does not match dim {dataset.dim}")
    x, y = dataset.stacked()
    return bool(np.min(y * (x @ w)) > 0.0)


def save_dataset(dataset: Dataset, path) -> None:
    """Write the line-oriented text format.

    Line 1: `D m margin radius`; then one line per example
    `client y x_1 ... x_D`; the trailing line holds the witness coordinates.
    All reals use round-trip decimal precision.
    """
    lines = [
        f"{dataset.dim} {dataset.num_clients} "
        f"{dataset.certified_margin!r} {dataset.certified_radius!r}"
    ]
    for i in range(dataset.num_clients):
        xs, ys = dataset.shard(i)
        for x, y in zip(xs, ys):
            coords = " ".join(repr(float(v)) for v in x)
            lines.append(f"{i} {int(y)} {coords}")
    lines.append(" ".join(repr(float(v)) for v in dataset.witness))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    """Read the format written by save_dataset and re-certify the result."""
    with open(path, "r", encoding="utf-8") as f:
        rows = [ln.strip() for ln in f if ln.strip()]
    if len(rows) < 3:
        raise ValueError(f"{path}: truncated dataset file")
    head = rows[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: bad header line")
    dim, m = int(head[0]), int(head[1])
    margin, radius = float(head[2]), float(head[3])

    witness = np.array([float(v) for v in rows[-1].split()])
    if witness.shape != (dim,):
        raise ValueError(f"{path}: witness line has {witness.shape[0]} fields, want {dim}")

    per_client_x: list[list[np.ndarray]] = [[] for _ in range(m)]
    per_client_y: list[list[float]] = [[] for _ in range(m)]
    for ln in rows[1:-1]:
        fields = ln.split()
        if len(fields) != 2 + dim:
            raise ValueError(f"{path}: example line has {len(fields)} fields, want {2 + dim}")
        ci = int(fields[0])
        if not 0 <= ci < m:
            raise ValueError(f"{path}: client index {ci} out of range")
        y = float(fields[1])
        if y not in (-1.0, 1.0):
            raise ValueError(f"{path}: label {y} is not -1 or +1")
        per_client_x[ci].append(np.array([float(v) for v in fields[2:]]))
        per_client_y[ci].append(y)

    client_x = [
        np.array(xs).reshape(len(xs), dim) if xs else np.empty((0, dim))
        for xs in per_client_x
    ]
    client_y = [np.array(ys) for ys in per_client_y]
    ds = _build(client_x, client_y, witness)
    if abs(ds.certified_margin - margin) > 1e-12 or abs(ds.certified_radius - radius) > 1e-12:
        raise ValueError(
            f"{path}: stored certificate ({margin}, {radius}) disagrees with "
            f"recomputed ({ds.certified_margin}, {ds.certified_radius})"
        )
    return ds
