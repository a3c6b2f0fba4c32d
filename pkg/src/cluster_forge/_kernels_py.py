"""Pure-Python reference kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built and as the baseline in ``benchmarks/``.
Subsets of ``{0..n-1}`` are bitmasks; subset-indexed arrays have length ``2**n``.
"""

import numpy as np

IMPLEMENTATION = "python"


def subset_convolve(f, g, n):
    f = np.asarray(f, dtype=complex).tolist()
    g = np.asarray(g, dtype=complex).tolist()
    size = 1 << n
    out = [0j] * size
    for I in range(size):
        acc = 0j
        J = I
        while True:
            acc += f[J] * g[I ^ J]
            if J == 0:
                break
            J = (J - 1) & I
        out[I] = acc
    return np.array(out, dtype=complex)


def subset_inverse(f, n):
    f = np.asarray(f, dtype=complex).tolist()
    size = 1 << n
    inv0 = 1.0 / f[0]
    out = [0j] * size
    out[0] = inv0
    for I in range(1, size):
        acc = 0j
        J = (I - 1) & I  # proper subsets of I, J != I
        while True:
            acc += out[J] * f[I ^ J]
            if J == 0:
                break
            J = (J - 1) & I
        out[I] = -acc * inv0
    return np.array(out, dtype=complex)


def connected_from_psi(psi, n):
    psi = np.asarray(psi, dtype=complex).tolist()
    size = 1 << n
    out = [0j] * size
    for S in range(1, size):
        low = S & -S
        rest = S ^ low
        acc = psi[S]
        # T = low | A with A a proper subset of rest
        if rest:
            A = (rest - 1) & rest
            while True:
                T = low | A
                acc -= out[T] * psi[S ^ T]
                if A == 0:
                    break
                A = (A - 1) & rest
        out[S] = acc
    return np.array(out, dtype=complex)


def occupation_connected(vectors, psi, nz, offsets, binom, N):
    """Connected sums over occupation vectors by rooted-component recursion.

    ``vectors`` (T, m) lists every occupation vector with total <= N in
    lexicographic order; ``offsets[i, B, v]`` ranks them; ``nz`` holds the
    row indices c != 0 with ``psi[c] != 0``.
    """
    vectors = np.asarray(vectors, dtype=np.int64)
    T, m = vectors.shape
    psi_l = np.asarray(psi, dtype=complex).tolist()
    vec_l = vectors.tolist()
    off = np.asarray(offsets, dtype=np.int64).tolist()
    bn = np.asarray(binom, dtype=float).tolist()
    nz_l = [int(c) for c in nz]
    out = [0j] * T
    for t in range(1, T):
        k = vec_l[t]
        s = 0
        while k[s] == 0:
            s += 1
        acc = psi_l[t]
        for ci in nz_l:
            c = vec_l[ci]
            coef = 1.0
            ok = True
            for x in range(m):
                top = k[x] - (1 if x == s else 0)
                if c[x] > top:
                    ok = False
                    break
                coef *= bn[top][c[x]]
            if not ok:
                continue
            B = N
            r = 0
            for x in range(m):
                v = k[x] - c[x]
                r += off[x][B][v]
                B -= v
            acc -= coef * out[r] * psi_l[ci]
        out[t] = acc
    return np.array(out, dtype=complex)


def box_partition_graded(nsites, ptr, idx, masks, weights):
    """Graded set-partition sums ``P[S, j]`` over polymer families tiling ``S``.

    ``ptr``/``idx`` are CSR lists of the polymers containing each site; ``j``
    counts polymers.
    """
    size = 1 << nsites
    ptr = [int(p) for p in ptr]
    idx = [int(p) for p in idx]
    masks = [int(p) for p in masks]
    weights = [float(w) for w in weights]
    P = np.zeros((size, nsites + 1))
    P[0, 0] = 1.0
    rows = [None] * size
    rows[0] = P[0].tolist()
    for S in range(1, size):
        low = (S & -S).bit_length() - 1
        acc = [0.0] * (nsites + 1)
        for q in range(ptr[low], ptr[low + 1]):
            p = idx[q]
            mk = masks[p]
            if mk & S != mk:
                continue
            sub = rows[S ^ mk]
            w = weights[p]
            for j in range(nsites):
                if sub[j]:
                    acc[j + 1] += w * sub[j]
        rows[S] = acc
    return np.array(rows, dtype=float)
