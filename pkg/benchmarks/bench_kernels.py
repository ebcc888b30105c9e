"""Time the compiled kernels against the numpy/Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]

Each kernel runs on identical inputs in both backends; the script also
checks that the reservoir outputs are byte-identical before timing them.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from lognnet._backend import compiled_kernels, python_kernels
from lognnet.chaos import MapKind


def cases(rng):
    sine = MapKind.SINE_LOGISTIC.code
    henon = MapKind.HENON1.code
    W, _ = python_kernels.fill(henon, (0.1, 0.1, 1.4, 0.3), 26, 100)
    Y = np.concatenate(([1.0], rng.uniform(-1, 1, 25)))
    Ys = np.hstack([np.ones((2000, 1)), rng.uniform(-1, 1, (2000, 25))])
    W1 = rng.uniform(-0.5, 0.5, (101, 40))
    W2 = rng.uniform(-0.5, 0.5, (41, 3))
    X = np.hstack([np.ones((2000, 1)), rng.uniform(-0.5, 0.5, (2000, 100))])
    labels = rng.integers(0, 3, 2000).astype(np.int64)
    return {
        "fill henon1 26x100": lambda k: k.fill(henon, (0.1, 0.1, 1.4, 0.3), 26, 100),
        "fill sine-logistic 26x100": lambda k: k.fill(sine, (0.5, 3.0, 1.5, 784.0), 26, 100),
        "project 26x100": lambda k: k.project(W, Y),
        "project_batch 2000x26x100": lambda k: k.project_batch(W, Ys),
        "project_streaming henon1 26x100": lambda k: k.project_streaming(henon, (0.1, 0.1, 1.4, 0.3), Y, 100),
        "forward_batch 2000x101x40x3": lambda k: k.forward_batch(W1, W2, X),
        "sgd_epoch 2000x101x40x3": lambda k: k.sgd_epoch(W1.copy(), W2.copy(), X, labels, 0.05),
    }


def check_identical(rng) -> None:
    Y = np.concatenate(([1.0], rng.uniform(-1, 1, 25)))
    for code, params in ((MapKind.HENON1.code, (0.1, 0.1, 1.4, 0.3)),
                         (MapKind.SINE_LOGISTIC.code, (0.5, 3.0, 1.5, 784.0))):
        a = python_kernels.project_streaming(code, params, Y, 100)
        b = compiled_kernels.project_streaming(code, params, Y, 100)
        if a[1] != b[1] or np.asarray(a[0]).tobytes() != np.asarray(b[0]).tobytes():
            sys.exit("backends disagree on project_streaming; refusing to benchmark")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    if compiled_kernels is None:
        sys.exit("compiled extension not built: run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    check_identical(rng)
    rows = []
    for name, fn in cases(rng).items():
        timings = {}
        for label, mod in (("python", python_kernels), ("cython", compiled_kernels)):
            number = 1 if label == "python" else 10
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            timings[label] = best
        rows.append({"kernel": name, **timings, "speedup": timings["python"] / timings["cython"]})
    if args.json:
        print(json.dumps(rows, indent=1))
        return
    print(f"{'kernel':36s} {'python':>12s} {'cython':>12s} {'speedup':>9s}")
    for r in rows:
        print(f"{r['kernel']:36s} {r['python'] * 1e3:10.3f}ms {r['cython'] * 1e3:10.3f}ms "
              f"{r['speedup']:8.1f}x")


if __name__ == "__main__":
    main()
