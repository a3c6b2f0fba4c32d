"""Cluster expansion on finite discrete models.

A :class:`DiscreteModel` is a finite state space with complex weights ``w``
(the measure), a symmetric pair coupling ``zeta = exp(-u) - 1`` including the
diagonal (states may repeat in a configuration), a stability function ``b``
and a criterion function ``a``.

Sums over ordered n-tuples of states are grouped by occupation vector ``k``
(``k_x`` copies of state ``x``): the summand depends only on ``k`` and
``n!/k!`` tuples share it.  Connected-graph sums ``Conn(k)`` over a labeled
point configuration with occupation ``k`` are built by the rooted-component
recursion in :func:`cluster_forge.kernels.occupation_connected`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import (
    ArgumentError,
    CapacityError,
    InconsistencyError,
    ModelError,
    PreconditionError,
)
from .subsetalg import ZetaMatrix, connected_sum, tree_sum_kirchhoff

MAX_URSELL = 8
MAX_TABLE = 2_000_000
MAX_PAIR_WORK = 400_000_000
DEFAULT_MAX_ORDER = 40


@dataclass(frozen=True)
class DiscreteModel:
    weights: np.ndarray
    coupling: ZetaMatrix
    b: np.ndarray | None = None
    a: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        coupling = self.coupling
        if not isinstance(coupling, ZetaMatrix):
            coupling = ZetaMatrix(coupling)
            object.__setattr__(self, "coupling", coupling)
        if coupling.n != len(w):
            raise ArgumentError(f"{len(w)} weights but coupling is {coupling.n}x{coupling.n}")
        for name in ("b", "a"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.broadcast_to(np.asarray(v, dtype=float), w.shape).copy()
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ArgumentError(f"{name} must be finite and nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_u(cls, weights, u, b=None, a=None) -> "DiscreteModel":
        return cls(weights, ZetaMatrix.from_u(u), b, a)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def zeta(self) -> np.ndarray:
        return self.coupling.zeta

    @property
    def hard_core_diagonal(self) -> bool:
        return bool(np.all(np.diag(self.zeta) == -1))

    def b_values(self) -> np.ndarray:
        return np.zeros(self.size) if self.b is None else np.asarray(self.b)

    def a_values(self) -> np.ndarray:
        if self.a is None:
            raise PreconditionError("model has no criterion function a")
        return np.asarray(self.a)

    def with_weights(self, weights) -> "DiscreteModel":
        return replace(self, weights=np.asarray(weights, dtype=complex))


def ursell_phi(z) -> complex:
    """``phi(x_1..x_n)``: 1 for one point, else the connected-graph sum over ``n!``."""
    zeta = z.zeta if isinstance(z, ZetaMatrix) else np.asarray(z, dtype=complex)
    n = zeta.shape[0]
    if n < 1:
        raise ArgumentError("phi needs at least one point")
    if n > MAX_URSELL:
        raise CapacityError(f"ursell_phi capped at n={MAX_URSELL}")
    if n == 1:
        return 1.0 + 0j
    return connected_sum(zeta) / math.factorial(n)


# ---------------------------------------------------------------------------
# occupation-vector tables


@lru_cache(maxsize=64)
def _vectors(m: int, B: int) -> np.ndarray:
    """All length-m nonnegative integer vectors with sum <= B, lexicographic."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    blocks = []
    for v in range(B + 1):
        tail = _vectors(m - 1, B - v)
        blocks.append(np.hstack([np.full((len(tail), 1), v, dtype=np.int64), tail]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def _count(p: int, B: int) -> int:
    return math.comb(B + p, p)


class OccupationTable:
    """Every occupation vector of ``m`` states with total at most ``N``, ranked lexicographically."""

    def __init__(self, m: int, N: int):
        total = _count(m, N)
        if total > MAX_TABLE:
            raise CapacityError(f"{total} occupation vectors (m={m}, N={N}) exceed {MAX_TABLE}")
        self.m, self.N = m, N
        self.vectors = _vectors(m, N)
        self.order = self.vectors.sum(axis=1)
        off = np.zeros((m, N + 1, N + 2), dtype=np.int64)
        for i in range(m):
            p = m - i - 1
            for B in range(N + 1):
                acc = 0
                for v in range(B + 1):
                    off[i, B, v] = acc
                    acc += _count(p, B - v)
                off[i, B, B + 1] = acc
        self.offsets = off
        self.binom = np.array(
            [[math.comb(a, c) for c in range(N + 1)] for a in range(N + 1)], dtype=float
        )
        lf = np.array([math.lgamma(j + 1) for j in range(N + 1)])
        self.log_kfact = lf[self.vectors].sum(axis=1)

    def __len__(self):
        return len(self.vectors)

    def rank(self, k: np.ndarray) -> np.ndarray:
        """Row index of each occupation vector in ``k`` (shape (..., m))."""
        k = np.asarray(k, dtype=np.int64)
        r = np.zeros(k.shape[:-1], dtype=np.int64)
        B = np.full(k.shape[:-1], self.N, dtype=np.int64)
        for i in range(self.m):
            v = k[..., i]
            r += self.offsets[i, B, v]
            B = B - v
        return r

    def monomials(self, w: np.ndarray) -> np.ndarray:
        """``prod_x w_x^{k_x} / k_x!`` for every row."""
        w = np.asarray(w, dtype=complex)
        out = np.ones(len(self), dtype=complex)
        for x in range(self.m):
            out *= _int_power(w[x], self.vectors[:, x])
        return out * np.exp(-self.log_kfact)

    def psi(self, zeta: np.ndarray) -> np.ndarray:
        """``prod_{pairs} (1 + zeta)`` over a configuration with occupation ``k``."""
        base = 1.0 + np.asarray(zeta, dtype=complex)
        k = self.vectors
        out = np.ones(len(self), dtype=complex)
        for x in range(self.m):
            out *= _int_power(base[x, x], k[:, x] * (k[:, x] - 1) // 2)
            for y in range(x + 1, self.m):
                out *= _int_power(base[x, y], k[:, x] * k[:, y])
        return out


def _int_power(base: complex, expo: np.ndarray) -> np.ndarray:
    expo = np.asarray(expo, dtype=np.int64)
    if base == 0:
        return (expo == 0).astype(complex)
    return np.power(complex(base), expo)


def _csum(values) -> complex:
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def connected_table(model: DiscreteModel, N: int) -> tuple[OccupationTable, np.ndarray]:
    """``Conn(k)`` for every occupation vector of total ``<= N``."""
    table = OccupationTable(model.size, N)
    psi = table.psi(model.zeta)
    nz = np.flatnonzero(psi[1:] != 0) + 1
    nz = nz[table.order[nz] < N]
    if len(table) * len(nz) * model.size > MAX_PAIR_WORK:
        raise CapacityError(
            f"order {N} needs ~{len(table) * len(nz):.3g} pair updates; lower the order"
        )
    conn = kernels.occupation_connected(table.vectors, psi, nz, table.offsets, table.binom, N)
    return table, conn


# ---------------------------------------------------------------------------
# brute-force partition functions


def _truncation_order(M: float, eps: float, prefactor: float = 1.0) -> int:
    """Smallest ``N`` with ``prefactor * sum_{n>N} M^n/n! <= eps``."""
    if not math.isfinite(M):
        raise ModelError("weight sum diverges")
    N = 0
    while True:
        if N + 2 > M:
            head = prefactor * math.exp((N + 1) * math.log(M) - math.lgamma(N + 2)) if M > 0 else 0.0
            if head / (1 - M / (N + 2)) <= eps:
                return N
        N += 1
        if N > 400:
            raise CapacityError("weight sum too large for brute-force truncation")


def _occupation_sum(model: DiscreteModel, w: np.ndarray, eps: float, prefactor: float) -> complex:
    m = model.size
    if m == 0:
        return 1.0 + 0j
    if model.hard_core_diagonal:
        N = m
    else:
        M = float(np.sum(np.abs(w) * np.exp(model.b_values())))
        N = _truncation_order(M, eps, prefactor)
    table = OccupationTable(m, N)
    if model.hard_core_diagonal:
        keep = np.all(table.vectors <= 1, axis=1)
    else:
        keep = slice(None)
    terms = table.monomials(w)[keep] * table.psi(model.zeta)[keep]
    return _csum(terms)


def bruteforce_Z(model: DiscreteModel, eps: float = 1e-15) -> complex:
    """Partition function as a direct sum over configurations.

    With a hard-core diagonal only repetition-free configurations survive and
    the sum is finite; otherwise it is cut where the factorial tail bound
    ``M^n/n!`` (``M = sum |w| e^b``) drops below ``eps``.
    """
    return _occupation_sum(model, model.weights, eps, 1.0)


def bruteforce_corr(model: DiscreteModel, points, eps: float = 1e-15) -> complex:
    """Unnormalized one- or two-point correlation function ``Z(x1)`` / ``Z(x1, x2)``."""
    points = tuple(int(p) for p in np.atleast_1d(points))
    if len(points) not in (1, 2):
        raise ArgumentError("points must hold one or two state indices")
    zeta = model.zeta
    w = np.array(model.weights)
    pre = 1.0 + 0j
    for p in points:
        if not 0 <= p < model.size:
            raise ArgumentError(f"state {p} out of range")
        w = w * (1.0 + zeta[p])
    if len(points) == 2:
        pre = 1.0 + zeta[points[0], points[1]]
    bsum = float(sum(model.b_values()[p] for p in points))
    return pre * _occupation_sum(model, w, eps, math.exp(bsum))


# ---------------------------------------------------------------------------
# truncated cluster series


@dataclass
class SeriesResult:
    """Partial sums of a cluster series with its convergence diagnostics.

    ``tail_estimate`` is a geometric extrapolation of the last order ratios and
    is a heuristic, never a bound.  ``tail_bound`` is the rigorous remainder
    implied by the convergence envelope (``inf`` when no variant is certified).
    """

    partial_sums: list[complex]
    order_terms: list[complex]
    envelope: dict[int, float] = field(default_factory=dict)
    abs_partial: dict[int, list[float]] = field(default_factory=dict)
    tail_estimate: float = math.inf
    tail_bound: float = math.inf
    converged: bool = False
    variant: str | None = None
    oracle_gap: float | None = None

    @property
    def order(self) -> int:
        return len(self.partial_sums)

    @property
    def value(self) -> complex:
        return self.partial_sums[-1]


def certified_variants(model: DiscreteModel, tol: float = 1e-12) -> list[str]:
    """Which of the two smallness criteria hold at every weighted state."""
    from .criteria import check_assumption, stability_holds

    if model.a is None or not stability_holds(model):
        return []
    live = np.abs(model.weights) > 0
    out = []
    for which in ("kp", "tree"):
        margin = check_assumption(model, which, model.a)
        if np.all(margin[live] >= -tol):
            out.append(which)
    return out


def _envelope_factor(model: DiscreteModel, variant: str) -> np.ndarray:
    a, b = model.a_values(), model.b_values()
    return (np.exp(a) - 1) * np.exp((2 if variant == "kp" else 1) * b)


def _geometric_tail(terms: list[complex]) -> float:
    mags = [abs(t) for t in terms]
    if len(mags) < 4:
        return math.inf
    last = mags[-3:]
    prev = mags[-4:-1]
    ratios = [c / p for c, p in zip(last, prev) if p > 0]
    if not ratios or last[-1] == 0:
        return 0.0 if last[-1] == 0 else math.inf
    r = max(ratios)
    return math.inf if r >= 1 else last[-1] * r / (1 - r)


def _anchor_rows(table: OccupationTable, anchors: tuple[int, ...], max_total: int) -> tuple[np.ndarray, np.ndarray]:
    sel = np.flatnonzero(table.order <= max_total)
    k = table.vectors[sel].copy()
    for x in anchors:
        k[:, x] += 1
    return sel, table.rank(k)


def _series_tables(model, N):
    table, conn = connected_table(model, N)
    mono = table.monomials(model.weights)
    return table, conn, mono


def _abs_partials(model, table, conn, x1, N) -> list[float]:
    """``sum_{2<=n<=N'} n * (sum over x2..xn of |w| |phi|)`` for ``N' = 1..N``."""
    amono = table.monomials(np.abs(model.weights))
    sel, ranks = _anchor_rows(table, (x1,), N - 1)
    contrib = np.abs(amono[sel]) * np.abs(conn[ranks])
    orders = table.order[sel] + 1
    out, acc = [], 0.0
    for n in range(1, N + 1):
        if n >= 2:
            acc += math.fsum(contrib[orders == n])
        out.append(acc)
    return out


def cluster_logZ(
    model: DiscreteModel,
    N: int | None = None,
    tol: float = 1e-10,
    max_order: int = DEFAULT_MAX_ORDER,
    certify: bool = True,
    oracle: bool = False,
) -> SeriesResult:
    """Partial sums ``S_1..S_N`` of ``log Z = sum_n sum_{x_1..x_n} (prod w) phi``.

    With ``N=None`` the order grows until the last three order contributions
    fall below ``tol``.  When ``certify`` is set the model must satisfy a
    stability bound and at least one smallness criterion; every anchor's
    absolute partial sums are then checked against the envelope and a breach
    raises :class:`InconsistencyError`.
    """
    variants = certified_variants(model) if certify else []
    if certify and not variants:
        raise PreconditionError("model is not certified by either criterion (pass certify=False to override)")
    orders = [N] if N is not None else [n for n in (8, 12, 16, 24, 32, 40, 48, 64) if n < max_order] + [max_order]
    for Ncur in orders:
        table, conn, mono = _series_tables(model, Ncur)
        terms = mono * conn
        order_terms = [_csum(terms[table.order == n]) for n in range(1, Ncur + 1)]
        small = all(abs(t) <= tol for t in order_terms[-3:])
        if N is not None or small:
            break
    partial, acc = [], 0j
    for t in order_terms:
        acc += t
        partial.append(acc)
    res = SeriesResult(partial, order_terms, converged=small)
    res.tail_estimate = _geometric_tail(order_terms)
    if variants:
        variant = "kp" if "kp" in variants else "tree"
        res.variant = variant
        env = {v: _envelope_factor(model, v) for v in variants}
        bound = np.minimum.reduce([env[v] for v in variants])
        for x1 in np.flatnonzero(np.abs(model.weights) > 0):
            sums = _abs_partials(model, table, conn, int(x1), len(order_terms))
            res.abs_partial[int(x1)] = sums
            res.envelope[int(x1)] = float(bound[x1])
            if sums[-1] > bound[x1] * (1 + 1e-10) + 1e-14:
                raise InconsistencyError(
                    f"anchor {x1}: absolute partial sum {sums[-1]:.6g} exceeds envelope {bound[x1]:.6g}"
                )
        res.tail_bound = float(np.sum(np.abs(model.weights) * bound)) / (len(order_terms) + 1)
    if oracle:
        res.oracle_gap = abs(nearest_log(bruteforce_Z(model), res.value) - res.value)
    return res


def nearest_log(Z: complex, ref: complex) -> complex:
    """Branch of ``log Z`` closest to ``ref``."""
    if Z == 0:
        raise ModelError("Z vanishes")
    base = complex(np.log(complex(Z)))
    k = round((ref.imag - base.imag) / (2 * math.pi))
    return base + 2j * math.pi * k


def cluster_zhat(
    model: DiscreteModel,
    anchors,
    N: int,
    certify: bool = True,
    partials: bool = False,
):
    """Truncated cluster functions ``Zhat(x1)`` or ``Zhat(x1, x2)`` up to order ``N``.

    With ``partials`` the list of partial sums by order is returned instead of
    the final value.
    """
    anchors = tuple(int(x) for x in np.atleast_1d(anchors))
    if len(anchors) not in (1, 2):
        raise ArgumentError("anchors must hold one or two states")
    for x in anchors:
        if not 0 <= x < model.size:
            raise ArgumentError(f"state {x} out of range")
    variants = certified_variants(model) if certify else []
    if certify and not variants:
        raise PreconditionError("model is not certified by either criterion")
    q = len(anchors)
    if N < q:
        return [] if partials else 0j
    table, conn, mono = _series_tables(model, N)
    sel, ranks = _anchor_rows(table, anchors, N - q)
    terms = mono[sel] * conn[ranks]
    orders = table.order[sel] + q
    out, acc = [], 0j
    for n in range(q, N + 1):
        acc += _csum(terms[orders == n])
        out.append(acc)
    if q == 1 and variants:
        x1 = anchors[0]
        a, b = model.a_values()[x1], model.b_values()[x1]
        cap = min(math.exp(a + (2 if v == "kp" else 1) * b) for v in variants)
        if abs(out[-1]) > cap * (1 + 1e-10):
            raise InconsistencyError(f"|Zhat({x1})| = {abs(out[-1]):.6g} exceeds e^(a+2b) = {cap:.6g}")
    return out if partials else out[-1]


def zhat_all(model: DiscreteModel, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Every ``Zhat(x)`` and ``Zhat(x, y)`` to order ``N`` from one connected table (no certification)."""
    m = model.size
    table, conn, mono = _series_tables(model, N)
    one = np.zeros(m, dtype=complex)
    two = np.zeros((m, m), dtype=complex)
    for x in range(m):
        sel, ranks = _anchor_rows(table, (x,), N - 1)
        one[x] = _csum(mono[sel] * conn[ranks])
        for y in range(x, m):
            if N < 2:
                continue
            sel, ranks = _anchor_rows(table, (x, y), N - 2)
            two[x, y] = two[y, x] = _csum(mono[sel] * conn[ranks])
    return one, two


@dataclass
class EnvelopeReport:
    K: list[float]
    abs_partial: list[float]
    K_bound: float
    phi_bound: float
    variant: str


def _tree_weights(model: DiscreteModel, variant: str) -> tuple[np.ndarray, np.ndarray]:
    b = model.b_values()
    if variant == "kp":
        return np.abs(model.zeta), np.exp(2 * b)
    if variant == "tree":
        return np.abs(model.coupling.ubar()), np.exp(b)
    raise ArgumentError(f"unknown variant {variant!r}")


def k_envelope(model: DiscreteModel, x1: int, N: int, variant: str = "kp", check: bool = True) -> EnvelopeReport:
    """``K_1..K_N`` at anchor ``x1``: tree sums weighted by ``e^{2b}`` and ``|w|``.

    Tree sums over each point configuration use the matrix-tree theorem.
    With ``check`` the bounds ``K_N <= e^{a+2b}`` and the absolute partial sums
    of the connected series ``<= (e^a - 1) e^{2b}`` are enforced (``e^b`` for
    the tree variant).
    """
    if not 1 <= N <= 10:
        raise CapacityError("k_envelope supports 1 <= N <= 10")
    weights, eb = _tree_weights(model, variant)
    m = model.size
    table = OccupationTable(m, N - 1)
    amono = table.monomials(np.abs(model.weights)).real
    by_order = [0.0] * (N + 1)
    for row, k in enumerate(table.vectors):
        if amono[row] == 0:
            continue
        pts = [x1] + [x for x in range(m) for _ in range(k[x])]
        n = len(pts)
        w = weights[np.ix_(pts, pts)]
        t = tree_sum_kirchhoff(w) if n > 1 else 1.0
        by_order[n] += amono[row] * float(np.prod(eb[pts])) * t
    K, acc = [], 0.0
    for n in range(1, N + 1):
        acc += by_order[n]
        K.append(acc)
    a = model.a_values()[x1]
    b = model.b_values()[x1]
    e = 2 if variant == "kp" else 1
    K_bound = math.exp(a + e * b)
    phi_bound = (math.exp(a) - 1) * math.exp(e * b)
    table_c, conn = connected_table(model, N)
    abs_partial = _abs_partials(model, table_c, conn, x1, N)
    if check:
        if K[-1] > K_bound * (1 + 1e-10):
            raise InconsistencyError(f"K_{N}({x1}) = {K[-1]:.6g} exceeds {K_bound:.6g}")
        if abs_partial[-1] > phi_bound * (1 + 1e-10) + 1e-14:
            raise InconsistencyError(f"connected partial sum {abs_partial[-1]:.6g} exceeds {phi_bound:.6g}")
    return EnvelopeReport(K, abs_partial, K_bound, phi_bound, variant)


def decay_bound_rhs(model: DiscreteModel, x: int, y: int, M: int | None = None, variant: str = "kp") -> float:
    """Right side of the truncated two-point decay bound, chains up to ``M`` interior points.

    ``M=None`` sums all chain lengths (Neumann series); ``inf`` if it diverges.
    Truncating at finite ``M`` gives a smaller, still valid, comparison value
    only when the full series is finite.
    """
    weights, eb = _tree_weights(model, variant)
    c = np.exp(model.a_values()) * eb
    A = weights * c[:, None]
    D = np.abs(model.weights)
    DA = D[:, None] * A
    if M is None:
        rho = max(abs(np.linalg.eigvals(DA))) if model.size else 0.0
        if rho >= 1:
            return math.inf
        chain = A @ np.linalg.solve(np.eye(model.size) - DA, np.eye(model.size))
        total = chain[x, y]
    else:
        vec = A[:, y].copy()
        total = vec[x]
        for _ in range(M):
            vec = A @ (D * vec)
            total += vec[x]
    return float(c[y] * total)
