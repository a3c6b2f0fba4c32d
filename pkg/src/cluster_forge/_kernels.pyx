# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "cython"


def subset_convolve(f, g, int n):
    cdef const double complex[::1] fv = np.ascontiguousarray(f, dtype=complex)
    cdef const double complex[::1] gv = np.ascontiguousarray(g, dtype=complex)
    cdef Py_ssize_t size = 1 << n
    out = np.zeros(size, dtype=complex)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t I, J
    cdef double complex acc
    with nogil:
        for I in range(size):
            acc = 0
            J = I
            while True:
                acc = acc + fv[J] * gv[I ^ J]
                if J == 0:
                    break
                J = (J - 1) & I
            ov[I] = acc
    return out


def subset_inverse(f, int n):
    cdef const double complex[::1] fv = np.ascontiguousarray(f, dtype=complex)
    cdef Py_ssize_t size = 1 << n
    out = np.zeros(size, dtype=complex)
    cdef double complex[::1] ov = out
    cdef double complex inv0 = 1.0 / fv[0]
    cdef Py_ssize_t I, J
    cdef double complex acc
    ov[0] = inv0
    with nogil:
        for I in range(1, size):
            acc = 0
            J = (I - 1) & I
            while True:
                acc = acc + ov[J] * fv[I ^ J]
                if J == 0:
                    break
                J = (J - 1) & I
            ov[I] = -acc * inv0
    return out


def connected_from_psi(psi, int n):
    cdef const double complex[::1] pv = np.ascontiguousarray(psi, dtype=complex)
    cdef Py_ssize_t size = 1 << n
    out = np.zeros(size, dtype=complex)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t S, low, rest, A, T
    cdef double complex acc
    with nogil:
        for S in range(1, size):
            low = S & -S
            rest = S ^ low
            acc = pv[S]
            if rest:
                A = (rest - 1) & rest
                while True:
                    T = low | A
                    acc = acc - ov[T] * pv[S ^ T]
                    if A == 0:
                        break
                    A = (A - 1) & rest
            ov[S] = acc
    return out


def occupation_connected(vectors, psi, nz, offsets, binom, int N):
    cdef const cnp.int64_t[:, ::1] vec = np.ascontiguousarray(vectors, dtype=np.int64)
    cdef const double complex[::1] pv = np.ascontiguousarray(psi, dtype=complex)
    cdef const cnp.int64_t[::1] nzv = np.ascontiguousarray(nz, dtype=np.int64)
    cdef const cnp.int64_t[:, :, ::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[:, ::1] bn = np.ascontiguousarray(binom, dtype=float)
    cdef Py_ssize_t T = vec.shape[0]
    cdef Py_ssize_t m = vec.shape[1]
    cdef Py_ssize_t C = nzv.shape[0]
    out = np.zeros(T, dtype=complex)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t t, s, q, ci, x, B, r, top, v
    cdef double coef
    cdef bint ok
    cdef double complex acc
    with nogil:
        for t in range(1, T):
            s = 0
            while vec[t, s] == 0:
                s += 1
            acc = pv[t]
            for q in range(C):
                ci = nzv[q]
                coef = 1.0
                ok = True
                for x in range(m):
                    top = vec[t, x] - (1 if x == s else 0)
                    if vec[ci, x] > top:
                        ok = False
                        break
                    coef = coef * bn[top, vec[ci, x]]
                if not ok:
                    continue
                B = N
                r = 0
                for x in range(m):
                    v = vec[t, x] - vec[ci, x]
                    r += off[x, B, v]
                    B -= v
                acc = acc - coef * ov[r] * pv[ci]
            ov[t] = acc
    return out


def box_partition_graded(int nsites, ptr, idx, masks, weights):
    cdef const cnp.int64_t[::1] pt = np.ascontiguousarray(ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const cnp.int64_t[::1] mk = np.ascontiguousarray(masks, dtype=np.int64)
    cdef const double[::1] wt = np.ascontiguousarray(weights, dtype=float)
    cdef Py_ssize_t size = 1 << nsites
    P = np.zeros((size, nsites + 1), dtype=float)
    cdef double[:, ::1] Pv = P
    cdef Py_ssize_t S, low, q, p, j, sub
    cdef cnp.int64_t m_
    cdef double w
    Pv[0, 0] = 1.0
    with nogil:
        for S in range(1, size):
            low = 0
            while not (S >> low) & 1:
                low += 1
            for q in range(pt[low], pt[low + 1]):
                p = ix[q]
                m_ = mk[p]
                if (m_ & S) != m_:
                    continue
                sub = S ^ m_
                w = wt[p]
                for j in range(nsites):
                    if Pv[sub, j] != 0.0:
                        Pv[S, j + 1] += w * Pv[sub, j]
    return P
