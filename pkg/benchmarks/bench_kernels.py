"""Benchmark the compiled sampling kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--sweeps 2500] [--groups 1]
"""

import argparse
import math
import time

import numpy as np

from auxtrial._kernels import fallback
from auxtrial.prior import hermite_rule

try:
    from auxtrial._kernels import _chain as compiled
except ImportError:
    compiled = None


def build_inputs(rng, k, sweeps, burn):
    nodes, weights = hermite_rule(30)
    return (
        rng.integers(0, 30, size=(k, 2, 4)).astype(float),
        rng.integers(0, 3, size=(k, 2, 2)).astype(float),
        np.ones(k), np.full(k, -1.5), np.full(k, 0.707), np.full(k, -0.8),
        np.full(k, 0.707), np.zeros(k), np.full(k, math.sqrt(0.8)),
        np.full(k, 6.0), np.full(k, 1.0), 0.1, nodes, weights,
        rng.standard_normal((sweeps, k, 6)), rng.random((sweeps, k, 6)),
        burn, np.array([0.3, 0.3, 0.4, 0.15, 0.5]), 50,
    )


def time_backend(fn, args, repeats=3):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sweeps", type=int, default=2500)
    parser.add_argument("--groups", type=int, default=1)
    opts = parser.parse_args()
    burn = opts.sweeps // 5
    rng = np.random.default_rng(1)
    args = build_inputs(rng, opts.groups, opts.sweeps, burn)

    t_py = time_backend(fallback.run_joint_chain, args, repeats=1)
    print(f"joint chain, {opts.sweeps} sweeps, K={opts.groups}")
    print(f"  pure python : {t_py:8.3f} s  ({opts.sweeps / t_py:9.0f} sweeps/s)")
    if compiled is None:
        print("  compiled    : extension not built")
        return
    t_c = time_backend(compiled.run_joint_chain, args)
    print(f"  compiled    : {t_c:8.3f} s  ({opts.sweeps / t_c:9.0f} sweeps/s)")
    print(f"  speedup     : {t_py / t_c:8.1f}x")

    out_c = compiled.run_joint_chain(*args)
    out_p = fallback.run_joint_chain(*args)
    identical = all(np.array_equal(np.asarray(a), np.asarray(b))
                    for a, b in zip(out_c, out_p))
    print(f"  bit-identical outputs: {identical}")


if __name__ == "__main__":
    main()
