"""Classical continuum gas with a radial pair potential.

Potentials are a hard core of radius ``core`` (``U = inf`` inside), an optional
run of constant steps, and an optional callable tail beyond the last step.
Only the Mayer function ``f = exp(-beta U) - 1`` enters the expansion.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .combin import enumerate_connected, enumerate_trees
from .errors import ArgumentError, CapacityError, ModelError, PreconditionError

QUAD_TOL = 1e-10
TAIL_CUTOFF = 1e-12
MAX_MAYER_ORDER = 5
SHARD_PAIRS = 2048
TAIL_SHELLS = 512


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    return d * ball_volume(d)


@dataclass(frozen=True)
class PairPotential:
    d: int
    core: float = 0.0
    steps: tuple = ()
    tail: Callable[[float], float] | None = None
    B: float = 0.0
    beta: float = 1.0
    z: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ArgumentError("dimension must be 1, 2 or 3")
        if self.core < 0 or self.beta <= 0 or self.z < 0 or self.B < 0:
            raise ArgumentError("core, z, B must be nonnegative and beta positive")
        steps = tuple((float(r), float(v)) for r, v in self.steps)
        lo = self.core
        for r, v in steps:
            if r <= lo or not math.isfinite(v):
                raise ArgumentError("steps must have increasing radii beyond the core and finite values")
            lo = r
        object.__setattr__(self, "steps", steps)
        if self.B == 0 and not self._nonnegative():
            raise ModelError("B = 0 requires a nonnegative potential; supply a stability constant")

    def _nonnegative(self) -> bool:
        if any(v < 0 for _, v in self.steps):
            return False
        if self.tail is not None:
            s = self.outer * (1 + np.geomspace(1e-6, 1e6, 2000))
            if np.any(np.asarray([self.tail(x) for x in s]) < 0):
                return False
        return True

    @property
    def outer(self) -> float:
        """Radius where the step part ends (the tail starts)."""
        return self.steps[-1][0] if self.steps else self.core

    @property
    def pure_hard_core(self) -> bool:
        return self.tail is None and all(v == 0 for _, v in self.steps)

    def U(self, s: float) -> float:
        if s < self.core:
            return math.inf
        lo = self.core
        for r, v in self.steps:
            if lo <= s <= r:
                return v
            lo = r
        return float(self.tail(s)) if self.tail is not None else 0.0

    def mayer_f(self, s) -> np.ndarray:
        """``exp(-beta U(s)) - 1``, vectorized over radii."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        out[s < self.core] = -1.0
        lo = self.core
        for r, v in self.steps:
            out[(s >= lo) & (s <= r)] = math.expm1(-self.beta * v)
            lo = r
        if self.tail is not None:
            m = s > lo
            out[m] = np.expm1(-self.beta * np.array([self.tail(x) for x in s[m]], dtype=float))
        return out

    def with_z(self, z: float) -> "PairPotential":
        return PairPotential(self.d, self.core, self.steps, self.tail, self.B, self.beta, z, self.name)


def hard_rod(sigma: float, beta: float = 1.0, z: float = 0.0) -> PairPotential:
    return PairPotential(1, sigma, beta=beta, z=z, name="hard_rod")


def hard_sphere(radius: float, d: int = 3, beta: float = 1.0, z: float = 0.0) -> PairPotential:
    return PairPotential(d, radius, beta=beta, z=z, name="hard_sphere")


def square_well(core: float, reach: float, depth: float, B: float, d: int = 3,
                beta: float = 1.0, z: float = 0.0) -> PairPotential:
    """Hard core ``core``, ``U = -depth`` out to ``reach``; ``B`` is supplied by the caller."""
    return PairPotential(d, core, ((reach, -depth),), B=B, beta=beta, z=z, name="square_well")


# ---------------------------------------------------------------------------
# radial integrals


def _radial(p: PairPotential, g: Callable[[float], float], kappa: float = 0.0) -> float:
    """``int_{|y| > core} e^{kappa |y|} g(|y|) dy`` by adaptive quadrature with doubling beyond the steps."""
    area = sphere_area(p.d)

    def shell(lo, hi):
        val, _ = integrate.quad(lambda s: s ** (p.d - 1) * math.exp(kappa * s) * g(s), lo, hi,
                                epsabs=QUAD_TOL, epsrel=1e-12, limit=200)
        return val

    total = 0.0
    lo = p.core
    for r, _ in p.steps:
        total += shell(lo, r)
        lo = r
    if p.tail is None:
        return area * total
    L = max(lo, 1.0)
    if L > lo:
        total += shell(lo, L)
    for _ in range(80):
        part = shell(L, 2 * L)
        total += part
        if abs(part) < QUAD_TOL and abs(p.tail(2 * L)) < TAIL_CUTOFF:
            return area * total
        L *= 2
    raise ModelError("tail integral does not converge")


def _core_integral(p: PairPotential, kappa: float = 0.0) -> float:
    """``int_{|y| < core} e^{kappa |y|} dy``."""
    if p.core == 0:
        return 0.0
    if kappa == 0:
        return ball_volume(p.d) * p.core ** p.d
    if p.d == 1:
        return 2 * math.expm1(kappa * p.core) / kappa
    val, _ = integrate.quad(lambda s: s ** (p.d - 1) * math.exp(kappa * s), 0, p.core,
                            epsabs=QUAD_TOL, epsrel=1e-12)
    return sphere_area(p.d) * val


def mayer_norm_integral(p: PairPotential, kappa: float = 0.0) -> float:
    """``int |exp(-beta U(y)) - 1| dy`` (weighted by ``e^{kappa|y|}`` when ``kappa > 0``)."""
    def absf(s):
        return abs(math.expm1(-p.beta * p.U(s)))
    return _core_integral(p, kappa) + _radial(p, absf, kappa)


def abs_potential_integral(p: PairPotential) -> float:
    """``int_{|y| > core} |U(y)| dy``."""
    return _radial(p, lambda s: abs(p.U(s)))


@dataclass
class CriterionResult:
    z_max: float
    margin: float
    mode: str

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.z_max)


def criterion_classical(p: PairPotential, mode: str = "rue", a: float = 1.0) -> CriterionResult:
    """Largest fugacity allowed by one of the two sufficient conditions.

    ``rue``: ``z e^{2 beta B} int|f| <= a e^{-a}`` (best at ``a = 1``).
    ``brf``: ``z e^{beta B} (|ball| r^d + beta int_{|y|>r} |U|) <= e^{-1}``.
    """
    if mode == "rue":
        I = mayer_norm_integral(p)
        bound = a * math.exp(-a) * math.exp(-2 * p.beta * p.B)
    elif mode == "brf":
        if p.core == 0 and not p.pure_hard_core:
            raise PreconditionError("brf condition needs a hard core or a zero tail")
        I = ball_volume(p.d) * p.core ** p.d + p.beta * abs_potential_integral(p)
        bound = math.exp(-1) * math.exp(-p.beta * p.B)
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    z_max = math.inf if I == 0 else bound / I
    return CriterionResult(z_max, z_max - p.z, mode)


# ---------------------------------------------------------------------------
# Mayer coefficients


@lru_cache(maxsize=8)
def _hard_rod_graph_volumes(n: int) -> tuple[tuple[int, float], ...]:
    """(edge count, volume at sigma = 1) of ``{x_1 = 0, |x_i - x_j| < 1 on edges}`` per connected graph."""
    out = []
    dim = n - 1
    for g in enumerate_connected(n):
        if dim == 1:
            out.append((len(g.edges), 2.0))
            continue
        rows = []
        for i, j in g.edges:
            a = np.zeros(dim)
            if i > 1:
                a[i - 2] += 1
            if j > 1:
                a[j - 2] -= 1
            rows.append(np.append(a, -1.0))
            rows.append(np.append(-a, -1.0))
        hs = HalfspaceIntersection(np.array(rows), np.zeros(dim))
        out.append((len(g.edges), ConvexHull(hs.intersections).volume))
    return tuple(out)


@dataclass
class MayerResult:
    value: float
    stderr: float
    method: str
    samples: int = 0


def hard_rod_coefficient(n: int, sigma: float) -> float:
    """Closed form ``(-n sigma)^{n-1} / n!`` for hard rods."""
    return (-n * sigma) ** (n - 1) / math.factorial(n)


class _RadialSampler:
    """Displacements from a shell-histogram density matching ``|f|`` exactly on the core and steps."""

    def __init__(self, p: PairPotential):
        self.p = p
        edges, mass = [0.0], []
        lo = p.core
        if p.core > 0:
            edges.append(p.core)
            mass.append(ball_volume(p.d) * p.core ** p.d)
        for r, v in p.steps:
            edges.append(r)
            mass.append(abs(math.expm1(-p.beta * v)) * ball_volume(p.d) * (r ** p.d - lo ** p.d))
            lo = r
        if p.tail is not None:
            R = lo if lo > 0 else 1.0
            while abs(p.tail(R)) > TAIL_CUTOFF:
                R *= 2
                if R > 1e8:
                    raise ModelError("tail does not decay")
            grid = np.linspace(lo, R, TAIL_SHELLS + 1)[1:]
            prev = lo
            for hi in grid:
                val, _ = integrate.quad(lambda s: s ** (p.d - 1) * abs(math.expm1(-p.beta * p.tail(s))),
                                        prev, hi, epsabs=1e-14)
                edges.append(hi)
                mass.append(sphere_area(p.d) * val)
                prev = hi
        self.edges = np.array(edges)
        mass = np.array(mass)
        if mass.sum() <= 0:
            raise ModelError("Mayer function vanishes identically")
        self.prob = mass / mass.sum()
        self.cdf = np.cumsum(self.prob)
        self.cdf[-1] = 1.0
        self.vol = ball_volume(p.d) * np.diff(self.edges ** p.d)
        self.density = np.where(self.prob > 0, self.prob / self.vol, 0.0)

    def draw(self, u_shell, u_rad, direction):
        k = np.minimum(np.searchsorted(self.cdf, u_shell, side="right"), len(self.prob) - 1)
        lo, hi = self.edges[k] ** self.p.d, self.edges[k + 1] ** self.p.d
        s = (lo + u_rad * (hi - lo)) ** (1.0 / self.p.d)
        return s[..., None] * direction

    def pdf(self, r):
        k = np.searchsorted(self.edges, r, side="right") - 1
        inside = (k >= 0) & (k < len(self.density))
        return np.where(inside, self.density[np.clip(k, 0, len(self.density) - 1)], 0.0)


def _connected_batch(F: np.ndarray) -> np.ndarray:
    """Connected-graph sums of real Mayer matrices ``F`` (batch, n, n)."""
    S, n, _ = F.shape
    size = 1 << n
    psi = np.ones((S, size))
    for M in range(1, size):
        low = (M & -M).bit_length() - 1
        rest = M ^ (1 << low)
        if rest:
            prod = psi[:, rest].copy()
            for j in range(n):
                if rest >> j & 1:
                    prod *= 1.0 + F[:, low, j]
            psi[:, M] = prod
    conn = np.zeros((S, size))
    for M in range(1, size):
        low = M & -M
        rest = M ^ low
        acc = psi[:, M].copy()
        if rest:
            A = (rest - 1) & rest
            while True:
                T = low | A
                acc -= conn[:, T] * psi[:, M ^ T]
                if A == 0:
                    break
                A = (A - 1) & rest
        conn[:, M] = acc
    return conn[:, size - 1]


@lru_cache(maxsize=8)
def _tree_orders(n: int):
    """For each labeled tree: (child, parent) pairs in breadth-first order from vertex 0."""
    orders = []
    for t in enumerate_trees(n):
        adj = {i: [] for i in range(n)}
        for i, j in t.edges:
            adj[i - 1].append(j - 1)
            adj[j - 1].append(i - 1)
        seen, queue, pairs = {0}, [0], []
        while queue:
            v = queue.pop(0)
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    pairs.append((w, v))
                    queue.append(w)
        orders.append(tuple(pairs))
    return tuple(orders)


def _mc_shard(p: PairPotential, sampler: _RadialSampler, n: int, seed: int, shard: int) -> tuple[float, float]:
    """Sum and sum of squares of antithetic pair averages for one shard."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, shard]))
    orders = _tree_orders(n)
    S = SHARD_PAIRS
    tree = rng.integers(len(orders), size=S)
    u_shell = rng.random((S, n - 1))
    u_rad = rng.random((S, n - 1))
    if p.d == 1:
        direction = np.where(rng.random((S, n - 1, 1)) < 0.5, -1.0, 1.0)
    else:
        direction = rng.normal(size=(S, n - 1, p.d))
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    ntrees = n ** (n - 2)
    vals = []
    for flip in (False, True):
        us = 1 - u_shell if flip else u_shell
        ur = 1 - u_rad if flip else u_rad
        disp = sampler.draw(us, ur, direction)
        x = np.zeros((S, n, p.d))
        for t, pairs in enumerate(orders):
            sel = tree == t
            if not np.any(sel):
                continue
            xs = x[sel]
            for e, (child, parent) in enumerate(pairs):
                xs[:, child] = xs[:, parent] + disp[sel, e]
            x[sel] = xs
        r = np.linalg.norm(x[:, :, None, :] - x[:, None, :, :], axis=-1)
        F = p.mayer_f(r.reshape(-1)).reshape(S, n, n)
        G = sampler.pdf(r.reshape(-1)).reshape(S, n, n)
        iu = np.arange(n)
        G[:, iu, iu] = 0
        lap = np.diag(np.ones(n))[None] * G.sum(axis=2)[:, :, None] - G
        q = np.linalg.det(lap[:, 1:, 1:]) / ntrees
        with np.errstate(divide="ignore", invalid="ignore"):
            vals.append(np.where(q > 0, _connected_batch(F) / q, 0.0))
    pair = 0.5 * (vals[0] + vals[1])
    return float(pair.sum()), float((pair ** 2).sum())


def mayer_coefficient(p: PairPotential, n: int, method: str = "exact1d", seed: int | None = None,
                      samples: int = 1 << 15, threads: int = 1) -> MayerResult:
    """Cluster coefficient ``b_n = int phi(0, x_2..x_n) dx_2..dx_n``.

    ``exact1d`` sums signed polytope volumes over connected graphs (pure hard
    core in one dimension).  ``mc`` samples tree-structured configurations
    with displacements drawn from ``|f|``, pairs each draw with its antithetic
    partner, and splits the work into fixed shards seeded by ``(seed, shard)``
    so the estimate does not depend on ``threads``.
    """
    if n < 1:
        raise ArgumentError("order must be positive")
    if n > MAX_MAYER_ORDER:
        raise CapacityError(f"Mayer coefficients limited to n <= {MAX_MAYER_ORDER}")
    if n == 1:
        return MayerResult(1.0, 0.0, method)
    if method == "exact1d":
        if p.d != 1 or not p.pure_hard_core:
            raise PreconditionError("exact1d needs a one-dimensional pure hard core")
        vols = _hard_rod_graph_volumes(n)
        total = math.fsum((-1) ** e * v for e, v in vols)
        return MayerResult(total * p.core ** (n - 1) / math.factorial(n), 0.0, method)
    if method != "mc":
        raise ArgumentError(f"unknown method {method!r}")
    if seed is None:
        raise ArgumentError("mc needs a seed")
    sampler = _RadialSampler(p)
    shards = max(1, -(-samples // (2 * SHARD_PAIRS)))
    work = lambda k: _mc_shard(p, sampler, n, seed, k)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, range(shards)))
    else:
        parts = [work(k) for k in range(shards)]
    count = shards * SHARD_PAIRS
    s1 = math.fsum(a for a, _ in parts)
    s2 = math.fsum(b for _, b in parts)
    mean = s1 / count
    var = max(s2 / count - mean ** 2, 0.0)
    se = math.sqrt(var / (count - 1)) if math.isfinite(var) else math.inf
    scale = 1 / math.factorial(n)
    return MayerResult(mean * scale, se * scale, method, 2 * count)


def tonks_pressure(sigma: float, z: float) -> float:
    """``beta p = w`` solving ``w e^{sigma w} = z`` (bisection)."""
    if z == 0:
        return 0.0
    return optimize.bisect(lambda w: w * math.exp(sigma * w) - z, 0.0, z, xtol=1e-17, rtol=1e-15, maxiter=500)


@dataclass
class PressureResult:
    value: float
    coefficients: list[float]
    stderr: float = 0.0
    oracle: float | None = None
    tail_bound: float | None = None

    @property
    def gap(self) -> float | None:
        return None if self.oracle is None else abs(self.value - self.oracle)


def pressure_partial_sum(p: PairPotential, N: int, z: float | None = None, method: str = "exact1d",
                         seed: int | None = None, samples: int = 1 << 15) -> PressureResult:
    """``sum_{n<=N} b_n z^n`` with the hard-rod exact pressure as oracle when it applies."""
    z = p.z if z is None else z
    res = [mayer_coefficient(p, n, method, seed, samples) for n in range(1, N + 1)]
    coeffs = [r.value for r in res]
    value = math.fsum(c * z ** n for n, c in enumerate(coeffs, 1))
    se = math.sqrt(sum((r.stderr * z ** n) ** 2 for n, r in enumerate(res, 1)))
    out = PressureResult(value, coeffs, se)
    if p.d == 1 and p.pure_hard_core and p.core > 0:
        out.oracle = tonks_pressure(p.core, z)
        out.tail_bound = 2 * abs(hard_rod_coefficient(N + 1, p.core)) * z ** (N + 1)
    return out


@dataclass
class DecayReport:
    C1: float
    Cinf: float
    prefactor: float
    ok: bool
    applicable: bool = True
    detail: str = field(default="")


def decay_constants(p: PairPotential, kappa: float, z: float | None = None) -> DecayReport:
    """Norms of ``e^{kappa|x|} |f(x)|`` and the resulting correlation-decay prefactor."""
    if kappa < 0:
        raise ArgumentError("kappa must be nonnegative")
    z = p.z if z is None else z
    try:
        C1 = mayer_norm_integral(p, kappa)
    except ModelError:
        return DecayReport(math.inf, math.inf, math.inf, False, False, "weighted L1 norm diverges")
    if not math.isfinite(C1):
        return DecayReport(math.inf, math.inf, math.inf, False, False, "weighted L1 norm diverges")
    cand = [math.exp(kappa * p.core)] if p.core > 0 else []
    lo = p.core
    for r, v in p.steps:
        cand.append(math.exp(kappa * r) * abs(math.expm1(-p.beta * v)))
        lo = r
    if p.tail is not None:
        s = lo + np.geomspace(1e-9, 1e4, 4000) * max(lo, 1.0)
        cand.append(float(np.max(np.exp(kappa * s) * np.abs(p.mayer_f(s)))))
    Cinf = max(cand) if cand else 0.0
    x = z * math.exp(1 + 2 * p.beta * p.B) * C1
    ok = x < 1
    pref = math.exp(2 + 4 * p.beta * p.B) * (Cinf / C1) / (1 - x) if ok and C1 > 0 else math.inf
    return DecayReport(C1, Cinf, pref, ok)
