#!/usr/bin/env python3
"""Benchmark the compiled split-scan kernels against the numpy fallback.

Times the three kernel entry points on presorted columns across sizes,
then an end-to-end gradient-boosting fit through each backend. Run:

    python benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 5]
"""

import argparse
import os
import time

import numpy as np

from scorelens._kernels import fallback

try:
    from scorelens._kernels import _splitcore as compiled
except ImportError:
    compiled = None


def time_call(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        values = np.sort(rng.normal(size=n))
        labels = (rng.random(n) < 0.4).astype(np.float64)
        grad = rng.normal(size=n)
        hess = np.abs(rng.normal(size=n)) + 0.05
        cases = [
            ("class/gini", "best_split_class",
             (values, labels, 5, fallback.CRITERION_GINI)),
            ("class/entropy", "best_split_class",
             (values, labels, 5, fallback.CRITERION_ENTROPY)),
            ("variance", "best_split_variance", (values, grad, 5)),
            ("gradhess", "best_split_gradhess", (values, grad, hess, 1.0, 5)),
        ]
        for label, name, args in cases:
            t_fallback = time_call(getattr(fallback, name), args, repeat)
            if compiled is not None:
                t_compiled = time_call(getattr(compiled, name), args, repeat)
                speedup = t_fallback / t_compiled if t_compiled else float("inf")
                rows.append((label, n, t_fallback * 1e6, t_compiled * 1e6,
                             speedup))
            else:
                rows.append((label, n, t_fallback * 1e6, None, None))
    return rows


def bench_fit(n, repeat):
    """End-to-end gradient-boosting fit under each backend."""
    from scorelens.models import ModelConfig
    rng = np.random.default_rng(1)
    X = rng.normal(size=(n, 10))
    y = (X[:, 0] + 0.6 * X[:, 1] > 0).astype(np.float64)
    config = ModelConfig("gradient-boosting",
                         {"n_estimators": 50, "learning_rate": 0.1}, seed=0)

    def fit_with(backend):
        import scorelens._kernels as kernels
        from scorelens.models import boosting
        saved = (kernels.best_split_class, kernels.best_split_variance,
                 kernels.best_split_gradhess)
        kernels.best_split_class = backend.best_split_class
        kernels.best_split_variance = backend.best_split_variance
        kernels.best_split_gradhess = backend.best_split_gradhess
        try:
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                boosting.fit_gradient_boosting(X, y, config)
                best = min(best, time.perf_counter() - t0)
            return best
        finally:
            (kernels.best_split_class, kernels.best_split_variance,
             kernels.best_split_gradhess) = saved

    t_fb = fit_with(fallback)
    t_cc = fit_with(compiled) if compiled is not None else None
    return t_fb, t_cc


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--fit-rows", type=int, default=5000)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled is None:
        print("compiled extension not available; timing fallback only\n")
    print(f"{'kernel':<16}{'n':>9}{'numpy (us)':>14}{'compiled (us)':>15}"
          f"{'speedup':>9}")
    for label, n, t_fb, t_cc, speedup in bench_kernels(sizes, args.repeat):
        cc = f"{t_cc:14.1f}" if t_cc is not None else f"{'-':>14}"
        sp = f"{speedup:8.1f}x" if speedup is not None else f"{'-':>9}"
        print(f"{label:<16}{n:>9}{t_fb:14.1f}{cc} {sp}")

    t_fb, t_cc = bench_fit(args.fit_rows, max(1, args.repeat // 2))
    print(f"\ngradient-boosting fit ({args.fit_rows} rows, 50 trees):")
    print(f"  numpy fallback: {t_fb:.3f}s")
    if t_cc is not None:
        print(f"  compiled:       {t_cc:.3f}s  ({t_fb / t_cc:.2f}x)")


if __name__ == "__main__":
    main()
