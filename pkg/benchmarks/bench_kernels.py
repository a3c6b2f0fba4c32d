"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from cluster_forge import expansion, kernels, lattice_polymer as lp
from cluster_forge.subsetalg import psi_values


def cases(rng):
    n = 10
    f = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    g = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    f[0] = 1.0
    z = rng.normal(size=(n, n)) * 0.3
    psi = psi_values(z + z.T)
    yield "subset_convolve n=10", "subset_convolve", (f, g, n)
    yield "subset_inverse n=10", "subset_inverse", (f, n)
    yield "connected_from_psi n=10", "connected_from_psi", (psi, n)

    m, N = 3, 10
    u = rng.exponential(size=(m, m))
    u = u + u.T
    np.fill_diagonal(u, np.inf)
    model = expansion.DiscreteModel.from_u(np.full(m, 0.1), u)
    t = expansion.OccupationTable(m, N)
    ps = t.psi(model.zeta)
    nz = np.flatnonzero(ps[1:] != 0) + 1
    nz = nz[t.order[nz] < N]
    yield f"occupation_connected m={m} N={N}", "occupation_connected", (t.vectors, ps, nz, t.offsets, t.binom, N)

    polys = lp.box_polymers(2, (3, 4), 4)
    sites = sorted({s for p in polys for s in p.sites})
    index = {s: i for i, s in enumerate(sites)}
    masks = np.array([sum(1 << index[s] for s in p.sites) for p in polys], dtype=np.int64)
    w = np.exp(-np.array([len(p) for p in polys], dtype=float))
    by_site = [[k for k, p in enumerate(polys) if masks[k] >> i & 1] for i in range(len(sites))]
    ptr = np.cumsum([0] + [len(b) for b in by_site]).astype(np.int64)
    idx = np.array([k for b in by_site for k in b], dtype=np.int64)
    yield "box_partition_graded 3x4", "box_partition_graded", (len(sites), ptr, idx, masks, w)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_kernels is None:
        print("compiled extension not built; only the Python kernels are available")
    print(f"{'kernel':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for label, name, fargs in cases(np.random.default_rng(0)):
        py = min(timeit.repeat(lambda: getattr(kernels.python_kernels, name)(*fargs), number=1, repeat=args.repeat))
        if kernels.compiled_kernels is None:
            print(f"{label:34s} {py:11.4f} {'-':>13s} {'-':>8s}")
            continue
        fn = getattr(kernels.compiled_kernels, name)
        out_c = fn(*fargs)
        out_p = getattr(kernels.python_kernels, name)(*fargs)
        assert np.allclose(out_c, out_p, rtol=1e-10, atol=1e-12), label
        cy = min(timeit.repeat(lambda: fn(*fargs), number=1, repeat=args.repeat))
        print(f"{label:34s} {py:11.4f} {cy:13.5f} {py / cy:7.0f}x")


if __name__ == "__main__":
    main()
