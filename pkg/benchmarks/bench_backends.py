"""Benchmark the numba kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_backends.py [--repeats 5]

Covers the three hot paths: mutual information over joint matrices,
epsilon scans over channel matrices, and dense-joint enumeration of a
20-node binary network (~1M states). The numba backend is warmed up
before timing so compile time is reported separately.
"""

import argparse
import time

import numpy as np

from infoflow import _kernels


def build_inputs(rng):
    joints = [rng.dirichlet(np.ones(64)).reshape(8, 8) for _ in range(2000)]
    channels = [rng.dirichlet(np.ones(8), size=8) for _ in range(2000)]

    n_nodes = 20
    cards = np.full(n_nodes, 2, dtype=np.int64)
    cpts, parents = [], []
    for k in range(n_nodes):
        pars = [k - 2, k - 1] if k >= 2 else list(range(k))
        cpts.append(rng.dirichlet(np.ones(2), size=2 ** len(pars)))
        parents.append(pars)
    return joints, channels, (cards, cpts, parents)


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    joints, channels, net = build_inputs(rng)

    impls = dict(_kernels.IMPLEMENTATIONS)
    if "numba" not in impls:
        print("numba backend unavailable; benchmarking numpy only")

    if "numba" in impls:
        t0 = time.perf_counter()
        impls["numba"]["mi_bits"](joints[0])
        impls["numba"]["scan_log_ratio"](channels[0])
        impls["numba"]["dense_joint"](*net)
        print(f"numba warm-up (compile or cache load): {time.perf_counter() - t0:.2f} s")

    cases = {
        "mi_bits x2000 (8x8)": lambda impl: [impl["mi_bits"](m) for m in joints],
        "scan_log_ratio x2000 (8x8)": lambda impl: [impl["scan_log_ratio"](c) for c in channels],
        "dense_joint 20 binary nodes": lambda impl: impl["dense_joint"](*net),
    }

    print(f"{'case':<32}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for label, runner in cases.items():
        times = {name: bench(lambda impl=impl: runner(impl), args.repeats) for name, impl in impls.items()}
        row = f"{label:<32}" + "".join(f"{times[name] * 1e3:>10.2f}ms" for name in impls)
        if "numba" in times:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)

    # both paths must agree on the same inputs
    if "numba" in impls:
        a = impls["numpy"]["dense_joint"](*net)
        b = impls["numba"]["dense_joint"](*net)
        assert np.allclose(a, b, atol=1e-14), "backend mismatch"
        print("cross-check: dense joints agree to 1e-14")


if __name__ == "__main__":
    main()
