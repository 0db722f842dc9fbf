"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_backends.py``.  The same selection the
package makes at runtime (env var TEXSCORE_NO_NUMBA) chooses between these
two implementations; this script times both in one process.
"""

import time

import numpy as np

from texscore import backend
from texscore.forest import (
    ForestConfig,
    LabeledDataset,
    _split_scan_numpy,
    train_forest,
    tree_predict,
)
from texscore.texture import _count_pairs_numpy

if backend.HAVE_NUMBA:
    from texscore.forest import _split_scan_jit, _traverse_jit
    from texscore.texture import _count_pairs_jit


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_glcm(rng):
    # production-scale raster: 1504 x 1440 at 51 gray levels, offset (-3, +3)
    values = rng.integers(1, 52, size=(1504, 1440)).astype(np.int32)
    numpy_time = best_of(lambda: _count_pairs_numpy(values, 51, -3, 3))
    row = ("glcm counts 1504x1440", numpy_time, None)
    if backend.HAVE_NUMBA:
        _count_pairs_jit(values, 51, -3, 3)  # compile
        jit_time = best_of(lambda: _count_pairs_jit(values, 51, -3, 3))
        row = (row[0], numpy_time, jit_time)
    return row


def bench_split_scan(rng):
    # a typical root-node scan: 350 bootstrap rows, 51 candidate features
    # drawn from 2601, four classes
    X = rng.random((350, 2601))
    codes = rng.integers(0, 4, size=350).astype(np.int64)
    rows = rng.integers(0, 350, size=350).astype(np.int64)
    feats = np.sort(rng.choice(2601, size=51, replace=False)).astype(np.int64)
    numpy_time = best_of(lambda: _split_scan_numpy(X, codes, rows, feats, 4))
    row = ("split scan 350x51", numpy_time, None)
    if backend.HAVE_NUMBA:
        _split_scan_jit(X, codes, rows, feats, 4)  # compile
        jit_time = best_of(lambda: _split_scan_jit(X, codes, rows, feats, 4))
        row = (row[0], numpy_time, jit_time)
    return row


def bench_traverse(rng):
    ds = LabeledDataset(rng.random((400, 30)), rng.integers(0, 4, size=400))
    model = train_forest(ds, ForestConfig(n_trees=1, seed=0))
    tree = model.trees[0]
    X = rng.random((200_000, 30))
    out = np.empty(X.shape[0], dtype=np.int64)

    saved = backend.USE_NUMBA
    try:
        backend.USE_NUMBA = False
        numpy_time = best_of(lambda: tree_predict(tree, X))
        row = ("tree traversal 200k rows", numpy_time, None)
        if backend.HAVE_NUMBA:
            _traverse_jit(
                tree.feature, tree.threshold, tree.left, tree.right, tree.label, X, out
            )
            jit_time = best_of(
                lambda: _traverse_jit(
                    tree.feature, tree.threshold, tree.left, tree.right, tree.label, X, out
                )
            )
            row = (row[0], numpy_time, jit_time)
    finally:
        backend.USE_NUMBA = saved
    return row


def main():
    rng = np.random.default_rng(0)
    print(f"numba available: {backend.HAVE_NUMBA} | active backend: {backend.active_backend()}")
    print(f"{'kernel':<26} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for row in (bench_glcm(rng), bench_split_scan(rng), bench_traverse(rng)):
        name, numpy_time, jit_time = row
        if jit_time is None:
            print(f"{name:<26} {numpy_time * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
        else:
            print(
                f"{name:<26} {numpy_time * 1e3:>8.2f}ms {jit_time * 1e3:>8.2f}ms "
                f"{numpy_time / jit_time:>7.1f}x"
            )


if __name__ == "__main__":
    main()
