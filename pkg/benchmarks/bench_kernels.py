"""Time the hot kernels on every available backend.

Runs the four kernel functions on pipeline-sized workloads and prints a
per-kernel comparison. With only one backend importable the table simply
has one timing column.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wardwatt._kernels import available_backends
from wardwatt.explain import fit_cart


def _best_of(fn, repeats: int) -> float:
    """Best wall time in seconds over `repeats` calls."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _workloads():
    rng = np.random.default_rng(0)

    # default pipeline shapes: window 72, batch 32, two 50-unit layers
    T, B, H = 72, 32, 50
    x1 = rng.normal(size=(T, B, 1))
    w1 = rng.normal(scale=0.1, size=(1 + H, 4 * H))
    x2 = rng.normal(size=(T, B, H))
    w2 = rng.normal(scale=0.1, size=(H + H, 4 * H))
    b = np.zeros(4 * H)
    dh = rng.normal(size=(T, B, H))

    split_values = np.sort(rng.uniform(size=4096))
    split_targets = np.where(split_values > 0.37, 1.0, 0.0)
    split_targets = split_targets + rng.normal(scale=0.1, size=4096)

    tree_x = rng.uniform(size=(2000, 8))
    tree_y = np.sin(3.0 * tree_x[:, 0]) + tree_x[:, 1] ** 2
    tree = fit_cart(tree_x, tree_y, max_depth=10)
    query = rng.uniform(size=(100_000, 8))

    def bench(backend):
        fwd1 = lambda: backend.lstm_layer_forward(x1, w1, b)
        fwd2 = lambda: backend.lstm_layer_forward(x2, w2, b)
        h, c, gates = backend.lstm_layer_forward(x2, w2, b)
        bwd = lambda: backend.lstm_layer_backward(x2, w2, gates, c, h, dh)
        split = lambda: [
            backend.best_split_scan(split_values, split_targets, 1)
            for _ in range(50)
        ]
        predict = lambda: backend.tree_predict(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            query,
        )
        return [
            ("lstm forward  (72x32, 1->50)", fwd1),
            ("lstm forward  (72x32, 50->50)", fwd2),
            ("lstm backward (72x32, 50->50)", bwd),
            ("best_split_scan (4096 x 50)", split),
            ("tree_predict (100k rows, depth 10)", predict),
        ]

    return bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per kernel (best is reported)")
    args = parser.parse_args()

    backends = available_backends()
    names = [backend.BACKEND_NAME for backend in backends]
    print(f"backends: {', '.join(names)}")

    bench = _workloads()
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        for label, fn in bench(backend):
            fn()  # warm up caches and allocator
            results.setdefault(label, {})[backend.BACKEND_NAME] = _best_of(
                fn, args.repeats
            )

    width = max(len(label) for label in results)
    header = f"{'kernel':<{width}}" + "".join(f"  {n:>12}" for n in names)
    if len(names) == 2:
        header += "  " + f"{'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, timings in results.items():
        row = f"{label:<{width}}"
        for name in names:
            row += f"  {timings[name] * 1e3:>10.2f}ms"
        if len(names) == 2:
            row += f"  {timings[names[0]] / timings[names[1]]:>7.2f}x"
        print(row)


if __name__ == "__main__":
    main()
