#!/usr/bin/env python3
"""Benchmark the numba-jitted hot kernels against the pure-numpy fallback.

Kernel timings run both implementations in-process; the end-to-end replica
timing re-launches the interpreter with STALEMIX_BACKEND set, since the
backend is chosen at import time.
"""
import os
import subprocess
import sys
import time

import numpy as np

from stalemix import _kernels

REPLICA_CODE = """
import time
from stalemix.channel import NoiseModel
from stalemix.engine import DataSpec, RunConfig, run
from stalemix.scheduler import SchedulePolicy

cfg = RunConfig(
    data=DataSpec(dim=10, num_clients=8, examples_per_client=25, target_margin=0.15, seed=424242),
    profile=(0.6, 0.3, 0.1),
    policy=SchedulePolicy(kind="bernoulli_uniform", tau_dl=1, tau_ul=1,
                          participation_prob=0.6, fresh_prob=0.3),
    noise=NoiseModel("gaussian_isotropic", 0.2, 0.2),
    horizon=2000, seed=1)
dataset = cfg.data.build()
run(cfg, dataset)  # warm-up (jit compile / cache load)
t0 = time.perf_counter()
run(cfg, dataset)
print(f"{time.perf_counter() - t0:.3f}")
"""


def time_fn(fn, *args, repeat=2000):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_perceptron(n, dim, repeat=2000):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, dim))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    order = np.arange(n, dtype=np.int64)
    w = rng.standard_normal(dim)

    t_np = time_fn(lambda: _kernels._perceptron_epochs_impl(x, y, order, w.copy(), 1), repeat=max(repeat // 10, 10))
    t_nb = time_fn(lambda: _kernels._perceptron_epochs_nb(x, y, order, w.copy(), 1), repeat=repeat)
    print(f"perceptron epoch ({n:4d} x {dim:3d}):  numpy {t_np * 1e6:9.2f} us   "
          f"numba {t_nb * 1e6:9.2f} us   speedup {t_np / t_nb:6.1f}x")


def bench_normals(n, repeat=5000):
    out = np.empty(n)
    key = np.uint64(12345)
    t_np = time_fn(lambda: _kernels._fill_normals_np(key, out), repeat=repeat)
    t_nb = time_fn(lambda: _kernels._fill_normals_nb(key, out), repeat=repeat)
    print(f"normal block     ({n:4d}):        numpy {t_np * 1e6:9.2f} us   "
          f"numba {t_nb * 1e6:9.2f} us   speedup {t_np / t_nb:6.1f}x")


def bench_replica():
    for backend in ("numpy", "numba"):
        env = dict(os.environ, STALEMIX_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, "-c", REPLICA_CODE], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            print(f"replica ({backend}): FAILED\n{out.stderr}")
            continue
        print(f"end-to-end noisy replica, 2000 rounds ({backend}): {out.stdout.strip()}s")


def main():
    if _kernels.numba is None:
        print("numba not importable; nothing to compare")
        return
    print(f"active backend: {_kernels.BACKEND}")
    for n, dim in ((25, 10), (100, 10), (400, 50)):
        bench_perceptron(n, dim)
    for n in (10, 100):
        bench_normals(n)
    bench_replica()


if __name__ == "__main__":
    main()
