"""Stability and smallness criteria, tree-bound checks and random stable instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CapacityError, ModelError, PreconditionError
from .expansion import DiscreteModel, OccupationTable
from .subsetalg import StabilityWeights, ZetaMatrix, connected_sum, tree_sum_kirchhoff

MAX_SUBSET_STATES = 12
MAX_PROP1 = 7
MAX_PROBE = 6
DEFAULT_NMAX = 6
STABILITY_TOL = 1e-12
PROP1_RTOL = 1e-10


def _log_abs(base: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(base))


def _configurations(model: DiscreteModel, n_max: int) -> np.ndarray:
    """Occupation vectors tested for stability: all repetition-free subsets plus multisets up to ``n_max``."""
    m = model.size
    rows = []
    if m <= MAX_SUBSET_STATES:
        bits = (np.arange(1, 1 << m)[:, None] >> np.arange(m)) & 1
        rows.append(bits.astype(np.int64))
    elif model.hard_core_diagonal:
        raise CapacityError(f"exhaustive subset search limited to {MAX_SUBSET_STATES} states")
    if not model.hard_core_diagonal or m > MAX_SUBSET_STATES:
        table = OccupationTable(m, n_max)
        vec = table.vectors[1:]
        if model.hard_core_diagonal:
            vec = vec[np.all(vec <= 1, axis=1)]
        elif m <= MAX_SUBSET_STATES:
            vec = vec[np.any(vec >= 2, axis=1)]
        rows.append(vec)
    return np.vstack(rows)


def _log_psi(L: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``log prod_{pairs} |1 + zeta|`` for each occupation row; ``-inf`` marks a vanishing product."""
    m = L.shape[0]
    out = np.zeros(len(k))
    for x in range(m):
        cnt = k[:, x] * (k[:, x] - 1) // 2
        out += np.where(cnt > 0, L[x, x] * np.where(cnt > 0, cnt, 1), 0.0)
        for y in range(x + 1, m):
            cnt = k[:, x] * k[:, y]
            out += np.where(cnt > 0, L[x, y] * np.where(cnt > 0, cnt, 1), 0.0)
    return out


@dataclass
class StabilityReport:
    b: np.ndarray
    stable: bool
    worst: tuple[int, ...] = ()
    detail: str = ""


def _growth_direction(L: np.ndarray, rng: np.random.Generator, starts: int = 64) -> np.ndarray | None:
    """A direction ``p >= 0`` with ``p.L.p > 0``, if one is found.

    ``L`` holds the log pair factors among states that may co-occur.  A
    positive quadratic form means the pair product grows like ``exp(c n^2)``
    along ``n p`` and no finite ``b`` exists.
    """
    m = L.shape[0]
    Lf = np.where(np.isfinite(L), L, -1e300)
    for x in range(m):
        if Lf[x, x] > STABILITY_TOL:
            e = np.zeros(m)
            e[x] = 1
            return e
    for _ in range(starts):
        p = rng.dirichlet(np.ones(m))
        for _ in range(200):
            g = Lf @ p
            q = p * np.maximum(g - g.min() + 1e-12, 0)
            if q.sum() == 0:
                break
            p = q / q.sum()
        if p @ Lf @ p > STABILITY_TOL:
            return p
    return None


def fit_b(model: DiscreteModel, n_max: int = DEFAULT_NMAX, b=None, seed: int = 0) -> StabilityReport:
    """Smallest uniform stability constant, or validation of a supplied ``b``.

    Checked configurations are every subset of distinct states (up to 12
    states) plus multisets with repetition up to ``n_max`` points.  A positive
    direction of the log pair-factor quadratic form signals unbounded growth
    and is reported as unstable.
    """
    m = model.size
    zeta = model.zeta
    L = _log_abs(1.0 + zeta)
    diag_ok = np.isfinite(np.diag(L))
    sub = L[np.ix_(diag_ok, diag_ok)]
    direction = _growth_direction(sub, np.random.default_rng(seed)) if sub.size else None
    if direction is not None:
        states = tuple(int(i) for i in np.flatnonzero(diag_ok)[direction > 1e-9])
        return StabilityReport(np.full(m, math.inf), False, states,
                               "pair-factor product grows faster than exponentially")
    k = _configurations(model, n_max)
    lp = _log_psi(L, k)
    sizes = k.sum(axis=1)
    if b is None:
        ratio = np.where(np.isfinite(lp), lp / sizes, -np.inf)
        i = int(np.argmax(ratio))
        value = max(0.0, float(ratio[i]))
        worst = tuple(int(x) for x in np.repeat(np.arange(m), k[i])) if value > 0 else ()
        return StabilityReport(np.full(m, value), True, worst, "uniform")
    bv = np.broadcast_to(np.asarray(b, dtype=float), (m,)).copy()
    if np.any(bv < 0):
        raise ArgumentError("b must be nonnegative")
    excess = lp - k @ bv
    i = int(np.argmax(excess))
    if excess[i] > STABILITY_TOL * max(1.0, float(sizes[i])):
        worst = tuple(int(x) for x in np.repeat(np.arange(m), k[i]))
        return StabilityReport(bv, False, worst, f"excess {excess[i]:.3g}")
    return StabilityReport(bv, True, (), "validated")


def stability_holds(model: DiscreteModel, n_max: int = DEFAULT_NMAX) -> bool:
    return fit_b(model, n_max, b=model.b_values()).stable


def check_assumption(model: DiscreteModel, which: str, a) -> np.ndarray:
    """Per-state margin of a smallness criterion (certified where all margins are >= 0).

    ``kp``:   ``a(x) - sum_y |w(y)| |zeta(x,y)| e^{a(y) + 2 b(y)}``
    ``tree``: ``a(x) - sum_y |w(y)| |ubar(x,y)| e^{a(y) + b(y)}``
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), (model.size,))
    b = model.b_values()
    if which == "kp":
        W, e = np.abs(model.zeta), np.exp(a + 2 * b)
    elif which == "tree":
        W, e = np.abs(model.coupling.ubar()), np.exp(a + b)
    else:
        raise ArgumentError(f"unknown criterion {which!r}")
    return a - W @ (np.abs(model.weights) * e)


def verify_prop1(z: ZetaMatrix, b: StabilityWeights, mode: str = "a") -> tuple[float, float, bool]:
    """Compare ``|sum over connected graphs|`` with its tree bound.

    Mode ``a`` bounds by ``prod e^{2 b_i}`` times the ``|zeta|`` tree sum, mode
    ``b`` by ``prod e^{b_i}`` times the ``|ubar|`` tree sum.
    """
    n = z.n
    if n > MAX_PROP1:
        raise CapacityError(f"verify_prop1 limited to n <= {MAX_PROP1}")
    if len(b.b) != n:
        raise ArgumentError("b and zeta sizes differ")
    if not b.holds(z):
        raise PreconditionError("stability bound fails for these weights")
    lhs = abs(connected_sum(z.zeta)) if n > 1 else 1.0
    if mode == "a":
        rhs = math.exp(2 * b.b.sum()) * tree_sum_kirchhoff(np.abs(z.zeta))
    elif mode == "b":
        rhs = math.exp(b.b.sum()) * tree_sum_kirchhoff(np.abs(z.ubar()))
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    return lhs, rhs, bool(lhs <= rhs * (1 + PROP1_RTOL))


# ---------------------------------------------------------------------------
# random stable instances


def random_repulsive(rng: np.random.Generator, n: int, hard_core: float = 0.0, scale: float = 2.0,
                     imag: float = 1.0) -> tuple[ZetaMatrix, StabilityWeights]:
    """Pair potentials with ``Re u >= 0`` (stable with ``b = 0``), optional hard cores."""
    u = rng.exponential(scale, (n, n)) + 1j * imag * rng.normal(size=(n, n))
    hc = rng.random((n, n)) < hard_core
    u = np.where(hc, np.inf, u)
    u = np.triu(u, 1)
    u = u + u.T
    np.fill_diagonal(u, 0)
    return ZetaMatrix.from_u(u), StabilityWeights(np.zeros(n))


def random_mixed(rng: np.random.Generator, n: int, attract: float = 0.4) -> tuple[ZetaMatrix, StabilityWeights]:
    """Mixed-sign real potentials; ``b`` is the fitted uniform constant."""
    u = rng.normal(0.5, 1.0, (n, n))
    u = np.where(u < 0, attract * u, u)
    u = np.triu(u, 1)
    u = u + u.T
    np.fill_diagonal(u, 0)
    z = ZetaMatrix.from_u(u)
    zeta = np.array(z.zeta)
    np.fill_diagonal(zeta, -1)
    model = DiscreteModel(np.ones(n), ZetaMatrix(zeta))
    rep = fit_b(model)
    return z, StabilityWeights(rep.b)


def random_model(rng: np.random.Generator, m: int, kind: str = "repulsive", margin: float = 0.1,
                 a_range=(0.3, 1.0), complex_weights: bool = True, variants=("kp",)) -> DiscreteModel:
    """A hard-core-diagonal discrete model certified with at least ``margin`` under each listed variant.

    Weights get random phases; their moduli are scaled so that every margin
    of every requested criterion is at least ``margin``.
    """
    if kind == "repulsive":
        z, b = random_repulsive(rng, m, hard_core=0.2)
    elif kind == "mixed":
        z, b = random_mixed(rng, m)
    elif kind == "hardcore":
        z, b = random_repulsive(rng, m, hard_core=0.6, imag=0.0)
    else:
        raise ArgumentError(f"unknown instance kind {kind!r}")
    u = np.array(z.u_values())
    np.fill_diagonal(u, np.inf)
    coupling = ZetaMatrix.from_u(u)
    a = np.full(m, rng.uniform(*a_range))
    if a.min() <= margin:
        raise ArgumentError("margin must be below a")
    mod = rng.uniform(0.2, 1.0, m)
    phase = np.exp(2j * np.pi * rng.random(m)) if complex_weights else np.ones(m)
    scale = math.inf
    for which in variants:
        if which == "kp":
            load = np.abs(coupling.zeta) @ (mod * np.exp(a + 2 * b.b))
        elif which == "tree":
            load = np.abs(coupling.ubar()) @ (mod * np.exp(a + b.b))
        else:
            raise ArgumentError(f"unknown criterion {which!r}")
        scale = min(scale, float(np.min((a - margin) / load)))
    s = scale * rng.uniform(0.5, 1.0)
    return DiscreteModel(s * mod * phase, coupling, b.b, a)


# ---------------------------------------------------------------------------
# experimental


@dataclass
class ProbeReport:
    trials: int
    violations: list[dict] = field(default_factory=list)
    note: str = "hard-core pairs use ubar = 1 in the min; no correctness claim"


def conjecture_bound(z: ZetaMatrix, b: StabilityWeights) -> tuple[float, float]:
    """``|sum over connected graphs|`` and ``prod e^{b_i}`` times the ``min(|ubar|, |zeta|)`` tree sum."""
    lhs = abs(connected_sum(z.zeta)) if z.n > 1 else 1.0
    w = np.minimum(np.abs(z.ubar()), np.abs(z.zeta))
    return lhs, math.exp(b.b.sum()) * tree_sum_kirchhoff(w)


def conjecture_probe(trials: int, n_range=(2, 5), seed: int = 0, kinds=("repulsive", "mixed"),
                     experimental: bool = False) -> ProbeReport:
    """Search random stable instances for violations of the combined min tree bound.

    Quarantined: requires ``experimental=True`` and is never used to certify.
    """
    if not experimental:
        raise ArgumentError("conjecture_probe is experimental; pass experimental=True")
    lo, hi = n_range
    if lo < 2 or hi > MAX_PROBE:
        raise CapacityError(f"probe sizes must lie in 2..{MAX_PROBE}")
    report = ProbeReport(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        n = int(rng.integers(lo, hi + 1))
        kind = kinds[t % len(kinds)]
        z, b = random_repulsive(rng, n, hard_core=0.2) if kind == "repulsive" else random_mixed(rng, n)
        lhs, rhs = conjecture_bound(z, b)
        if lhs > rhs * (1 + PROP1_RTOL):
            report.violations.append({
                "trial": t, "kind": kind, "n": n, "lhs": lhs, "rhs": rhs,
                "u": np.array(z.u_values()).tolist(), "b": b.b.tolist(),
            })
    return report
