"""Compiled kernels vs the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time for each
backend and the speed-up.
"""
import argparse
import timeit

import numpy as np

from meshroute._kernels import _fallback
from meshroute.netmodel import generate_network, region_for_density

try:
    from meshroute._kernels import _core
except ImportError:  # pragma: no cover
    _core = None


def cases():
    net = generate_network(400, 20, region_for_density(400, 8.0), 1.0, seed=1)
    indptr, indices = net.csr(False)
    src = np.array(net.gateways, dtype=np.int32)
    rng = np.random.default_rng(2)
    values = rng.uniform(0, 12, 20_000)
    alphabet = np.arange(1, 11, dtype=float)
    centers = rng.uniform(0, 10, (10, 2))
    target = rng.uniform(0, 10, 2)
    radii_sq = (np.linalg.norm(centers - target, axis=1) + 1e-3) ** 2
    return {
        "bfs_multi (N=400, 20 sources)": lambda k: k.bfs_multi(indptr, indices, src, -1),
        "prox_discrete (20k values, |S|=10)": lambda k: k.prox_discrete(values, 0.1, alphabet),
        "project_disks (10 tight disks)": lambda k: k.project_disks(centers.mean(0), centers, radii_sq, 1e-8),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':38s} {'python':>10s} {'cython':>10s} {'speed-up':>9s}")
    for name, fn in cases().items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if _core is None:
            print(f"{name:38s} {py * 1e3:9.2f}ms {'-':>10s} {'-':>9s}")
            continue
        cy = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        print(f"{name:38s} {py * 1e3:9.2f}ms {cy * 1e3:9.2f}ms {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
