"""Commutative algebra of functions on the power set of ``{1..n}``.

The product is subset convolution, ``(f*g)(I) = sum_{J <= I} f(J) g(I - J)``,
with unit ``delta_{I, {}}``.  On top of it live the connected/all-graph pair
``(Phi, Psi)`` with ``Psi = exp(Phi)``, and the Kirkwood-Salsburg functions
``g`` and ``h`` whose recursions give the tree bound on connected sums.

Public functions take index sets with 1-based labels; internally a subset is a
bitmask with label ``i`` at bit ``i-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import combin, kernels
from .errors import ArgumentError, CapacityError, ModelError, SingularityError

MAX_UNIVERSE = 12
MAX_GRAPH_SUMS = 8
MAX_ENUMERATED = 6


def mask_of(labels: Iterable[int], n: int | None = None) -> int:
    m = 0
    for i in labels:
        if i < 1 or (n is not None and i > n):
            raise ArgumentError(f"label {i} outside 1..{n}")
        m |= 1 << (i - 1)
    return m


def labels_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


class SubsetFunction:
    """Dense complex function on all ``2**n`` subsets of ``{1..n}``."""

    __slots__ = ("n", "values")

    def __init__(self, n: int, values=None):
        if not 0 <= n <= MAX_UNIVERSE:
            raise CapacityError(f"universe size {n} outside 0..{MAX_UNIVERSE}")
        self.n = n
        if values is None:
            values = np.zeros(1 << n, dtype=complex)
        values = np.array(values, dtype=complex)
        if values.shape != (1 << n,):
            raise ArgumentError(f"expected {1 << n} values, got shape {values.shape}")
        values.setflags(write=False)
        self.values = values

    @classmethod
    def unit(cls, n: int) -> "SubsetFunction":
        v = np.zeros(1 << n, dtype=complex)
        v[0] = 1.0
        return cls(n, v)

    @classmethod
    def from_callable(cls, n: int, fn) -> "SubsetFunction":
        """Build from ``fn(labels_tuple)``."""
        return cls(n, [fn(labels_of(m)) for m in range(1 << n)])

    def __getitem__(self, labels) -> complex:
        if isinstance(labels, (int, np.integer)):
            raise ArgumentError("index with an iterable of labels, or use .values[mask]")
        return complex(self.values[mask_of(labels, self.n)])

    def _same(self, other: "SubsetFunction") -> None:
        if not isinstance(other, SubsetFunction) or other.n != self.n:
            raise ArgumentError("operands live on different universes")

    def __add__(self, other):
        self._same(other)
        return SubsetFunction(self.n, self.values + other.values)

    def __sub__(self, other):
        self._same(other)
        return SubsetFunction(self.n, self.values - other.values)

    def scale(self, c: complex) -> "SubsetFunction":
        return SubsetFunction(self.n, c * self.values)

    def __mul__(self, other):
        return convolve(self, other)

    def allclose(self, other, tol=1e-10) -> bool:
        self._same(other)
        return bool(np.all(np.abs(self.values - other.values) <= tol))

    def __repr__(self):
        return f"SubsetFunction(n={self.n})"


def convolve(f: SubsetFunction, g: SubsetFunction) -> SubsetFunction:
    f._same(g)
    return SubsetFunction(f.n, kernels.subset_convolve(f.values, g.values, f.n))


def alg_exp(f: SubsetFunction) -> SubsetFunction:
    """``1 + f + f^{*2}/2! + ... + f^{*n}/n!`` (exact: higher powers vanish)."""
    if f.values[0] != 0:
        raise ArgumentError("alg_exp needs f(empty) = 0")
    out = SubsetFunction.unit(f.n)
    term = out
    for k in range(1, f.n + 1):
        term = convolve(term, f).scale(1.0 / k)
        out = out + term
    return out


def alg_inverse(f: SubsetFunction) -> SubsetFunction:
    if f.values[0] == 0:
        raise SingularityError("f(empty) = 0 has no convolution inverse")
    return SubsetFunction(f.n, kernels.subset_inverse(f.values, f.n))


def shift(J: Iterable[int], f: SubsetFunction) -> SubsetFunction:
    """``(D_J f)(I) = f(I | J)`` if ``I`` and ``J`` are disjoint, else 0."""
    jm = mask_of(J, f.n)
    idx = np.arange(1 << f.n)
    out = np.where(idx & jm == 0, f.values[idx | jm], 0)
    return SubsetFunction(f.n, out)


@dataclass(frozen=True)
class ZetaMatrix:
    """Symmetric pair couplings ``zeta_ij = exp(-u_ij) - 1``.

    Diagonal entries are ignored by the subset algebra (pairs have ``i < j``)
    but are meaningful for discrete models with repeated states.  ``u`` is
    kept when known; ``inf`` marks a hard core, where ``zeta = -1``.
    """

    zeta: np.ndarray
    u: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        z = np.array(self.zeta, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ArgumentError("zeta must be a square matrix")
        if not np.allclose(z, z.T, atol=1e-14, rtol=0):
            raise ArgumentError("zeta must be symmetric")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)
        if self.u is not None:
            u = np.array(self.u, dtype=complex)
            if u.shape != z.shape:
                raise ArgumentError("u and zeta shapes differ")
            hard = np.isinf(u.real) & (u.real > 0)
            with np.errstate(over="ignore", invalid="ignore"):
                expect = np.where(hard, -1.0, np.exp(-np.where(hard, 0, u)) - 1.0)
            if np.any(np.abs(expect - z) > 1e-12 * np.maximum(1.0, np.abs(z))):
                raise ArgumentError("zeta != exp(-u) - 1")
            u.setflags(write=False)
            object.__setattr__(self, "u", u)

    @classmethod
    def from_u(cls, u) -> "ZetaMatrix":
        u = np.array(u, dtype=complex)
        hard = np.isinf(u.real) & (u.real > 0)
        with np.errstate(over="ignore", invalid="ignore"):
            z = np.where(hard, -1.0 + 0j, np.exp(-np.where(hard, 0, u)) - 1.0)
        return cls(z, u)

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    @property
    def hard_core(self) -> np.ndarray:
        if self.u is not None:
            return np.isinf(self.u.real) & (self.u.real > 0)
        return self.zeta == -1

    def u_values(self) -> np.ndarray:
        """``u`` as supplied, else ``-log(1 + zeta)`` (principal branch, ``inf`` at hard cores)."""
        if self.u is not None:
            return self.u
        with np.errstate(divide="ignore"):
            u = -np.log(1.0 + self.zeta)
        return np.where(self.hard_core, np.inf + 0j, u)

    def ubar(self) -> np.ndarray:
        """``u`` with hard-core entries replaced by 1."""
        return np.where(self.hard_core, 1.0 + 0j, self.u_values())

    def restrict(self, labels) -> "ZetaMatrix":
        ix = [i - 1 for i in labels]
        u = None if self.u is None else self.u[np.ix_(ix, ix)]
        return ZetaMatrix(self.zeta[np.ix_(ix, ix)], u)


@dataclass(frozen=True)
class StabilityWeights:
    b: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.ndim != 1 or np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ArgumentError("stability weights must be finite and nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @classmethod
    def uniform(cls, n: int, value: float) -> "StabilityWeights":
        return cls(np.full(n, float(value)))

    def violations(self, z: ZetaMatrix, tol: float = 1e-12) -> list[tuple[int, ...]]:
        """Subsets where ``prod_{i<j} |1+zeta_ij| <= prod_i e^{b_i}`` fails."""
        n = z.n
        logabs = _log_abs_one_plus(z.zeta)
        bad = []
        energy = np.zeros(1 << n)
        for S in range(1, 1 << n):
            low = (S & -S).bit_length() - 1
            rest = S ^ (1 << low)
            row = sum(logabs[low, j] for j in range(n) if rest >> j & 1)
            energy[S] = energy[rest] + row
            bsum = sum(self.b[j] for j in range(n) if S >> j & 1)
            if energy[S] > bsum + tol:
                bad.append(labels_of(S))
        return bad

    def holds(self, z: ZetaMatrix, tol: float = 1e-12) -> bool:
        return not self.violations(z, tol)


def _log_abs_one_plus(zeta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(1.0 + zeta))


def psi_values(zeta: np.ndarray) -> np.ndarray:
    """``Psi(S) = prod_{i<j in S} (1 + zeta_ij)`` for every bitmask ``S``."""
    n = zeta.shape[0]
    one_plus = 1.0 + np.asarray(zeta, dtype=complex)
    psi = np.ones(1 << n, dtype=complex)
    for S in range(1, 1 << n):
        low = (S & -S).bit_length() - 1
        rest = S ^ (1 << low)
        p = psi[rest]
        r = rest
        while r:
            j = (r & -r).bit_length() - 1
            p *= one_plus[low, j]
            r &= r - 1
        psi[S] = p
    return psi


@lru_cache(maxsize=None)
def _connected_edge_masks(k: int) -> np.ndarray:
    """Boolean (graphs x pairs) incidence for all connected graphs on k vertices."""
    pairs = combin.edge_list(k)
    pos = {p: i for i, p in enumerate(pairs)}
    rows = []
    for g in combin.enumerate_connected(k):
        row = np.zeros(len(pairs), dtype=bool)
        for e in g.edges:
            row[pos[e]] = True
        rows.append(row)
    out = np.array(rows, dtype=bool).reshape(len(rows), len(pairs))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _tree_edge_masks(k: int) -> np.ndarray:
    pairs = combin.edge_list(k)
    pos = {p: i for i, p in enumerate(pairs)}
    rows = []
    for g in combin.enumerate_trees(k):
        row = np.zeros(len(pairs), dtype=bool)
        for e in g.edges:
            row[pos[e]] = True
        rows.append(row)
    out = np.array(rows, dtype=bool).reshape(len(rows), len(pairs))
    out.setflags(write=False)
    return out


def _pair_vector(w: np.ndarray) -> np.ndarray:
    k = w.shape[0]
    iu = np.triu_indices(k, 1)
    return np.asarray(w)[iu]


def graph_sum_enumerated(w: np.ndarray, kind: str = "connected") -> complex:
    """``sum_G prod_{ij in G} w_ij`` by explicit enumeration of connected graphs or trees."""
    k = w.shape[0]
    if k <= 1:
        return 1.0 + 0j
    if k > MAX_ENUMERATED + (1 if kind == "tree" else 0):
        raise CapacityError(f"explicit {kind} enumeration capped at n={MAX_ENUMERATED}")
    masks = _connected_edge_masks(k) if kind == "connected" else _tree_edge_masks(k)
    vals = _pair_vector(w)
    prods = np.where(masks, vals[None, :], 1.0).prod(axis=1)
    return complex(prods.sum())


def connected_sum(zeta: np.ndarray) -> complex:
    """``sum_{G connected on all n points} prod zeta_ij`` via the rooted-component recursion."""
    n = zeta.shape[0]
    if n == 0:
        return 0j
    if n > MAX_UNIVERSE:
        raise CapacityError(f"connected sum capped at n={MAX_UNIVERSE}")
    phi = kernels.connected_from_psi(psi_values(zeta), n)
    return complex(phi[-1])


def phi_psi(z: ZetaMatrix, method: str = "recursive") -> tuple[SubsetFunction, SubsetFunction]:
    """Connected-graph and all-graph sums ``(Phi, Psi)`` on every subset."""
    n = z.n
    if n > MAX_GRAPH_SUMS:
        raise CapacityError(f"phi_psi capped at n={MAX_GRAPH_SUMS}")
    psi = psi_values(z.zeta)
    if method == "recursive":
        phi = kernels.connected_from_psi(psi, n)
    elif method == "enumerate":
        if n > MAX_ENUMERATED:
            raise CapacityError(f"enumerated phi capped at n={MAX_ENUMERATED}")
        phi = np.zeros(1 << n, dtype=complex)
        for S in range(1, 1 << n):
            ix = [i - 1 for i in labels_of(S)]
            phi[S] = graph_sum_enumerated(z.zeta[np.ix_(ix, ix)], "connected")
    else:
        raise ArgumentError(f"unknown method {method!r}")
    phi[0] = 0
    return SubsetFunction(n, phi), SubsetFunction(n, psi)


def select_iota(z: ZetaMatrix, b: StabilityWeights, I: Iterable[int], tol: float = 1e-12) -> int:
    """Smallest ``i`` in ``I`` with ``prod_{j in I-i} |1+zeta_ij| <= e^{2 b_i}``."""
    labels = sorted(set(I))
    if not labels:
        raise ArgumentError("iota needs a nonempty subset")
    logabs = _log_abs_one_plus(z.zeta)
    for i in labels:
        s = sum(logabs[i - 1, j - 1] for j in labels if j != i)
        if s <= 2 * b.b[i - 1] + tol:
            return i
    raise ModelError(f"no admissible iota for {labels}: stability fails on this subset")


def _check_pair(n: int, I, J) -> tuple[int, int]:
    im, jm = mask_of(I, n), mask_of(J, n)
    if im & jm:
        raise ArgumentError("I and J must be disjoint")
    if n > MAX_GRAPH_SUMS:
        raise CapacityError(f"Kirkwood-Salsburg functions capped at n={MAX_GRAPH_SUMS}")
    return im, jm


def _iota_table(z: ZetaMatrix, b: StabilityWeights):
    cache = {}

    def iota(mask):
        if mask not in cache:
            cache[mask] = select_iota(z, b, labels_of(mask)) - 1
        return cache[mask]

    return iota


def ks_g(z: ZetaMatrix, b: StabilityWeights, I, J, mode: str = "recursive") -> complex:
    """``g(I, J) = (Psi^{*-1} * D_I Psi)(J)``, directly or by the Kirkwood-Salsburg recursion."""
    n = z.n
    im, jm = _check_pair(n, I, J)
    if mode == "direct":
        psi = SubsetFunction(n, psi_values(z.zeta))
        return complex(convolve(alg_inverse(psi), shift(labels_of(im), psi)).values[jm])
    if mode != "recursive":
        raise ArgumentError(f"unknown mode {mode!r}")
    zeta = z.zeta
    one_plus = 1.0 + zeta
    iota = _iota_table(z, b)
    memo: dict[tuple[int, int], complex] = {}

    def g(Im, Jm):
        if Im == 0:
            return 1.0 + 0j if Jm == 0 else 0j
        key = (Im, Jm)
        if key in memo:
            return memo[key]
        i = iota(Im)
        Ip = Im ^ (1 << i)
        pref = 1.0 + 0j
        for j in labels_of(Ip):
            pref *= one_plus[j - 1, i]
        acc = 0j
        K = Jm
        while True:
            w = 1.0 + 0j
            for k in labels_of(K):
                w *= zeta[k - 1, i]
            acc += w * g(Ip | K, Jm ^ K)
            if K == 0:
                break
            K = (K - 1) & Jm
        memo[key] = pref * acc
        return memo[key]

    return g(im, jm)


def ks_h(z: ZetaMatrix, b: StabilityWeights, I, J, mode: str = "recursive") -> float:
    """Majorant ``h(I, J)`` of ``|g(I, J)|``, by recursion or as a rooted-forest sum."""
    n = z.n
    im, jm = _check_pair(n, I, J)
    za = np.abs(z.zeta)
    e2b = np.exp(2 * b.b)
    if im == 0:
        return 1.0 if jm == 0 else 0.0
    if mode == "forest":
        total = 0.0
        for forest in combin.enumerate_rooted_forests(labels_of(im), labels_of(jm)):
            w = 1.0
            for i, j in forest.edges:
                w *= za[i - 1, j - 1]
            total += w
        return float(np.prod([e2b[i - 1] for i in labels_of(im | jm)]) * total)
    if mode != "recursive":
        raise ArgumentError(f"unknown mode {mode!r}")
    iota = _iota_table(z, b)
    memo: dict[tuple[int, int], float] = {}

    def h(Im, Jm):
        if Im == 0:
            return 1.0 if Jm == 0 else 0.0
        key = (Im, Jm)
        if key in memo:
            return memo[key]
        i = iota(Im)
        Ip = Im ^ (1 << i)
        acc = 0.0
        K = Jm
        while True:
            w = 1.0
            for k in labels_of(K):
                w *= za[k - 1, i]
            acc += w * h(Ip | K, Jm ^ K)
            if K == 0:
                break
            K = (K - 1) & Jm
        memo[key] = e2b[i] * acc
        return memo[key]

    return float(h(im, jm))


def tree_sum_kirchhoff(w: np.ndarray) -> float:
    """``sum_{trees} prod w_ij`` over all spanning trees, by the matrix-tree theorem."""
    w = np.array(w, dtype=float)
    k = w.shape[0]
    if k <= 1:
        return 1.0
    np.fill_diagonal(w, 0.0)
    lap = np.diag(w.sum(axis=1)) - w
    return float(np.linalg.det(lap[1:, 1:]))
