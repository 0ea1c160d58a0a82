"""Local perceptron passes on one client's shard.

A client starts from a (possibly stale, possibly noisy) initialization,
sweeps its shard in a fixed seed-determined order for a whole number of
epochs, applies `w += y x` on every example with `y <w, x> <= 0`, and
reports the final vector together with the mistake count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import perceptron_epochs
from ._streams import permutation


@dataclass(frozen=True)
class LocalResult:
    w_out: np.ndarray
    mistakes: int
    init_used: np.ndarray


def shard_order(order_seed: int, shard_size: int) -> np.ndarray:
    """The visiting order for a shard; fixed per seed, reused across epochs."""
    return permutation(order_seed, shard_size)


def train_ordered(
    init: np.ndarray,
    shard_x: np.ndarray,
    shard_y: np.ndarray,
    order: np.ndarray,
    epochs: int = 1,
) -> tuple[np.ndarray, int]:
    """Core pass with a precomputed order; returns (w_out, mistakes).

    `init` is not modified.
    """
    w = np.array(init, dtype=np.float64, copy=True)
    if shard_x.shape[0] == 0:
        return w, 0
    k = perceptron_epochs(shard_x, shard_y, order, w, epochs)
    return w, int(k)


def local_train(
    init: np.ndarray,
    shard_x: np.ndarray,
    shard_y: np.ndarray,
    epochs: int = 1,
    order_seed: int = 0,
) -> LocalResult:
    """Run the local perceptron for `epochs` complete passes.

    Deterministic in its arguments: the shard order is the order_seed
    permutation, reused every epoch.  An empty shard is legal and returns
    zero mistakes with the initialization unchanged.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    init = np.asarray(init, dtype=np.float64)
    if shard_x.ndim != 2 or shard_x.shape[1] != init.shape[0]:
        raise ValueError(
            f"shard dimension {shard_x.shape} incompatible with init {init.shape}"
        )
    order = shard_order(order_seed, shard_x.shape[0])
    w, k = train_ordered(init, shard_x, shard_y, order, epochs)
    return LocalResult(w_out=w, mistakes=k, init_used=init.copy())


def _ineq_tol(lhs: float, rhs: float) -> float:
    return 1e-9 * (1.0 + abs(lhs) + abs(rhs))


def check_local_progress(
    result: LocalResult,
    stale_model: np.ndarray,
    downlink_noise: np.ndarray,
    witness: np.ndarray,
    margin: float,
    radius: float,
) -> bool:
    """Pathwise progress/norm-growth inequalities for one local run.

    Requires result.init_used == stale_model + downlink_noise.  Checks that
    the witness-aligned component grew by at least margin per mistake and the
    squared norm grew by at most radius^2 per mistake, both to a tolerance of
    1e-9 scaled by the magnitudes involved.
    """
    k = result.mistakes
    lhs1 = float(witness @ result.w_out)
    rhs1 = float(witness @ stale_model) + float(witness @ downlink_noise) + margin * k
    if lhs1 < rhs1 - _ineq_tol(lhs1, rhs1):
        return False
    init = stale_model + downlink_noise
    lhs2 = float(result.w_out @ result.w_out)
    rhs2 = float(init @ init) + radius * radius * k
    return lhs2 <= rhs2 + _ineq_tol(lhs2, rhs2)
