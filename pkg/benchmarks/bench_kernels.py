#!/usr/bin/env python3
"""Time the compiled counting kernel against the pure-Python fallback.

The two implementations are exchangeable (bit-identical outputs, see
tests/test_kernels.py); this script measures what the compiled path
actually buys at the batch sizes the training loop uses.

    python3 benchmarks/bench_kernels.py [--vocab 1000] [--alpha 1.5]
"""

import argparse
import time

import numpy as np

from frontier_lab._kernels import KERNEL_IMPL, AliasTable, sample_counts_py
from frontier_lab.zipf import make_zipf


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vocab", type=int, default=1000)
    parser.add_argument("--alpha", type=float, default=1.5)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    model = make_zipf(args.alpha, support=args.vocab)
    table = AliasTable(model.p(np.arange(1, args.vocab + 1)))
    print(f"active kernel: {KERNEL_IMPL}  (vocab={args.vocab}, alpha={args.alpha:g})")
    print(f"{'n_draws':>10} {'compiled':>12} {'python':>12} {'speedup':>8}")

    for n_draws in (64, 1024, 16_384, 262_144, 1_048_576):
        t_active = _time(
            lambda: table.sample_counts(np.random.PCG64(0), n_draws), args.repeats
        )
        t_py = _time(
            lambda: table.sample_counts(np.random.PCG64(0), n_draws, fn=sample_counts_py),
            args.repeats,
        )
        print(
            f"{n_draws:>10} {t_active * 1e3:>10.3f}ms {t_py * 1e3:>10.3f}ms "
            f"{t_py / t_active:>7.1f}x"
        )


if __name__ == "__main__":
    main()
