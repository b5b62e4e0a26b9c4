"""Time the numba kernels against the numpy fallback on Cayley-ball workloads.

    python benchmarks/bench_kernels.py [--radius 30] [--repeat 5]

Both backends are imported in-process from ``polyharm._kernels.IMPLEMENTATIONS``;
outputs are compared before timing so a fast wrong kernel cannot win.
"""

import argparse
import statistics
import time

import numpy as np

from polyharm import _kernels, balls
from polyharm.groups import Heisenberg, Lattice


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def workloads(radius, rng):
    z2 = balls.enumerate_ball(Lattice(2), radius=radius)
    h = balls.enumerate_ball(Heisenberg(), radius=max(4, radius // 3))
    for name, b in (("Z2", z2), ("Heisenberg", h)):
        ptr, idx = b.indptr, b.indices
        deg = np.diff(ptr).astype(np.float64)
        x = rng.standard_normal((b.n, 8))
        src = np.arange(0, b.n, max(1, b.n // 200))
        vals = rng.standard_normal((b.n, 4))
        F = rng.standard_normal((10, b.n))
        rhs = rng.standard_normal(b.n)
        yield f"{name} n={b.n}", {
            "dirichlet_matvec": lambda k, ptr=ptr, idx=idx, deg=deg, x=x: k(ptr, idx, deg, x),
            "graph_laplacian": lambda k, ptr=ptr, idx=idx, x=x: k(ptr, idx, x),
            "bfs_many": lambda k, ptr=ptr, idx=idx, src=src: k(ptr, idx, src, -1),
            "ball_layer_sums": lambda k, ptr=ptr, idx=idx, src=src, vals=vals: k(ptr, idx, src, vals, 6),
            "gram_prefix": lambda k, F=F: k(F, F.shape[1]),
            "gauss_seidel": lambda k, ptr=ptr, idx=idx, deg=deg, rhs=rhs: k(ptr, idx, deg + 1, rhs, np.zeros(len(rhs)), 2),
        }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "numba" not in _kernels.IMPLEMENTATIONS:
        raise SystemExit("numba is not installed; nothing to compare")
    nb, npy = _kernels.IMPLEMENTATIONS["numba"], _kernels.IMPLEMENTATIONS["numpy"]
    rng = np.random.default_rng(0)
    print(f"{'workload':<22}{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for label, calls in workloads(args.radius, rng):
        for name, call in calls.items():
            a, b = call(nb[name]), call(npy[name])  # also compiles the numba kernel
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)
            t_nb, _ = best_of(lambda: call(nb[name]), args.repeat)
            t_np, _ = best_of(lambda: call(npy[name]), max(1, args.repeat // 2))
            print(f"{label:<22}{name:<18}{t_nb:>12.5f}{t_np:>12.5f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
