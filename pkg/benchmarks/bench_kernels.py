"""Benchmark the jitted hot kernels against their pure-Python fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs compiled (the default import path) and uncompiled (the
same function body via ``py_func``), which is what you get by setting
``TROUGHKIT_NO_NUMBA=1`` before import.  Sizes are chosen to mirror the
pipeline's real workloads; fallback timings use smaller inputs where the
pure path would otherwise take minutes, and the speedup column is
size-adjusted accordingly.
"""

import argparse
import time

import numpy as np

from troughkit._accel import USE_NUMBA, python_impl
from troughkit.featlab import _DB4_LO, WAVE_LEVELS, WAVE_PAD, _aggregate_kernel, _rolling_rank_kernel, _wave_series_kernel
from troughkit.learners.isotonic import _pava
from troughkit.learners.linear import _cd_lasso
from troughkit.learners.svm import _smo
from troughkit.learners.trees import _grow_tree
from troughkit.turnlab import _extrema_scan


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeat):
    rng = np.random.default_rng(0)
    rows = []

    x = np.cumsum(rng.standard_normal(5000)) * 0.01
    rows.append(("extrema_scan n=5000 order=20", (x, 20), (x[:1000], 20), _extrema_scan, 5.0))

    series = np.cumsum(rng.standard_normal(3000)) * 0.01
    rows.append(
        (
            "wave_series n=3000 w=256",
            (series, _DB4_LO, 256, WAVE_PAD, WAVE_LEVELS),
            (series[:600], _DB4_LO, 256, WAVE_PAD, WAVE_LEVELS),
            _wave_series_kernel,
            3000 / 600,
        )
    )
    rows.append(("rolling_rank n=3000 w=252", (series, 252), (series[:800], 252), _rolling_rank_kernel, 3000 / 800))
    rows.append(("aggregate n=3000 L=10", (series, 10), (series, 10), _aggregate_kernel, 1.0))

    yb = rng.standard_normal(20000)
    rows.append(("pava n=20000", (yb, np.ones_like(yb)), (yb, np.ones_like(yb)), _pava, 1.0))

    Xs = rng.standard_normal((800, 20))
    ys = np.where(Xs[:, 0] + 0.5 * rng.standard_normal(800) > 0, 1.0, -1.0)
    rows.append(
        ("svm_smo n=800 d=20", (Xs, ys, 0.01, 1e-6, 200_000), (Xs[:150], ys[:150], 0.01, 1e-6, 200_000), _smo, None)
    )

    Xl = rng.standard_normal((1500, 30))
    yl = Xl[:, 0] - Xl[:, 1] + 0.5 * rng.standard_normal(1500)
    ylc = yl - yl.mean()
    w0 = np.zeros(30)
    rows.append(
        ("lasso_cd n=1500 d=30", (Xl, ylc, w0.copy(), 0.01, 500, 1e-7), (Xl, ylc, w0.copy(), 0.01, 500, 1e-7), _cd_lasso, 1.0)
    )

    Xt = rng.standard_normal((1500, 50))
    yt = (Xt[:, 3] + 1.2 * rng.standard_normal(1500) > 0.3).astype(float)  # noisy: forces deep trees

    def tree_fit(X, y, mtry):
        n = len(y)
        samples = np.arange(n, dtype=np.int64)
        pool = rng.random(2 * n * mtry + 1024)
        cap = 2 * n + 2
        return _grow_tree(
            X,
            y,
            samples,
            n + 1,
            1,
            mtry,
            pool,
            np.empty(cap, dtype=np.int64),
            np.zeros(cap),
            np.zeros(cap, dtype=np.int64),
            np.zeros(cap, dtype=np.int64),
            np.zeros(cap),
            np.zeros(X.shape[1]),
        )

    print(f"numba available and active: {USE_NUMBA}")
    header = f"{'kernel':38s} {'jit (s)':>10s} {'python (s)':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, args_fast, args_slow, fn, scale in rows:
        py = python_impl(fn)
        fn(*args_fast)  # compile outside the timer
        t_jit = _time(fn, *args_fast, repeat=repeat)
        t_py = _time(py, *args_slow, repeat=1)
        if scale is None:  # SMO iteration counts differ across sizes; report raw
            ratio = t_py / t_jit
            note = "*"
        else:
            ratio = (t_py * scale) / t_jit
            note = ""
        print(f"{name:38s} {t_jit:10.4f} {t_py:12.4f} {ratio:8.0f}x{note}")

    # tree kernel handled separately: the fallback is far too slow at full size
    t_jit = _time(lambda: tree_fit(Xt, yt, 7), repeat=repeat)
    py_tree = python_impl(_grow_tree)

    def tree_fit_py():
        n = 150
        samples = np.arange(n, dtype=np.int64)
        pool = rng.random(2 * n * 7 + 1024)
        cap = 2 * n + 2
        py_tree(
            Xt[:n],
            yt[:n],
            samples,
            n + 1,
            1,
            7,
            pool,
            np.empty(cap, dtype=np.int64),
            np.zeros(cap),
            np.zeros(cap, dtype=np.int64),
            np.zeros(cap, dtype=np.int64),
            np.zeros(cap),
            np.zeros(Xt.shape[1]),
        )

    t_py = _time(tree_fit_py, repeat=1)
    print(f"{'grow_tree n=1500 d=50 (py: n=150)':38s} {t_jit:10.4f} {t_py:12.4f} {'':>9s}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    bench(parser.parse_args().repeat)
