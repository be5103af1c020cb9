"""Compare the compiled im2col/col2im kernels against the numpy fallback.

Runs the same patch-extraction workload that dominates conv training on
both backends and reports wall time and agreement. Layer shapes mirror
the first two convolutions of the single-frame policy network.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--batch B]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def _load(name: str):
    mod = importlib.import_module(f"autorc.nn.kernels.{name}_backend"
                                  if name == "numpy" else
                                  "autorc.nn.kernels._native")
    return mod


def bench_backend(mod, x, kernel, stride, repeat):
    b, h, w, c = x.shape
    oh = mod.conv_out_size(h, kernel, stride)
    ow = mod.conv_out_size(w, kernel, stride)
    # warm up once so allocation noise stays out of the timing
    cols = mod.im2col(x, kernel, stride)
    t0 = time.perf_counter()
    for _ in range(repeat):
        cols = mod.im2col(x, kernel, stride)
    t_fwd = (time.perf_counter() - t0) / repeat

    t0 = time.perf_counter()
    for _ in range(repeat):
        mod.col2im(cols, x.shape, kernel, stride)
    t_bwd = (time.perf_counter() - t0) / repeat
    return cols.reshape(b, oh, ow, -1), t_fwd, t_bwd


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=16)
    args = ap.parse_args()

    numpy_mod = _load("numpy")
    try:
        native_mod = _load("native")
    except ImportError:
        print("native backend not built; run pip install -e . first")
        return 1

    rng = np.random.default_rng(0)
    cases = [
        ("conv1 120x160x3 k5 s2", (args.batch, 120, 160, 3), 5, 2),
        ("conv2 58x78x24 k5 s2", (args.batch, 58, 78, 24), 5, 2),
        ("conv4 12x17x64 k3 s2", (args.batch, 12, 17, 64), 3, 2),
    ]
    print(f"batch {args.batch}, repeat {args.repeat}")
    print(f"{'case':<24} {'numpy im2col':>13} {'native im2col':>14} "
          f"{'numpy col2im':>13} {'native col2im':>14} {'speedup':>8}")
    for name, shape, kernel, stride in cases:
        x = rng.random(shape)
        out_np, fwd_np, bwd_np = bench_backend(numpy_mod, x, kernel, stride,
                                               args.repeat)
        out_nat, fwd_nat, bwd_nat = bench_backend(native_mod, x, kernel,
                                                  stride, args.repeat)
        if not np.array_equal(out_np, out_nat):
            print(f"{name}: BACKENDS DISAGREE")
            return 1
        speed = (fwd_np + bwd_np) / (fwd_nat + bwd_nat)
        print(f"{name:<24} {fwd_np * 1e3:>11.2f}ms {fwd_nat * 1e3:>12.2f}ms "
              f"{bwd_np * 1e3:>11.2f}ms {bwd_nat * 1e3:>12.2f}ms "
              f"{speed:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
