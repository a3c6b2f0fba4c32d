"""Lattice polymers: connected subsets of Z^d with hard-core overlap and contact attraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from . import kernels
from .errors import ArgumentError, CapacityError
from .expansion import DiscreteModel
from .subsetalg import ZetaMatrix

MAX_SIZE = {1: 8, 2: 8, 3: 6}
MAX_BOX_POLYMERS = 2000
MAX_BOX_SITES = 18


@dataclass(frozen=True, order=True)
class Polymer:
    """A nonempty nearest-neighbour connected set of lattice sites, stored sorted."""

    sites: tuple

    def __post_init__(self):
        sites = tuple(sorted({tuple(int(c) for c in s) for s in self.sites}))
        if not sites:
            raise ArgumentError("polymer must be nonempty")
        dims = {len(s) for s in sites}
        if len(dims) != 1:
            raise ArgumentError("mixed dimensions")
        object.__setattr__(self, "sites", sites)
        if not _connected(sites):
            raise ArgumentError("polymer sites must be connected")

    @property
    def d(self) -> int:
        return len(self.sites[0])

    def __len__(self):
        return len(self.sites)

    def translate(self, v) -> "Polymer":
        return Polymer(tuple(tuple(a + b for a, b in zip(s, v)) for s in self.sites))

    def internal_bonds(self) -> int:
        return _bonds_between(self.sites, self.sites) // 2


def _neighbours(s):
    for i in range(len(s)):
        for step in (-1, 1):
            t = list(s)
            t[i] += step
            yield tuple(t)


def _connected(sites) -> bool:
    todo = {sites[0]}
    seen = set(todo)
    pool = set(sites)
    while todo:
        s = todo.pop()
        for t in _neighbours(s):
            if t in pool and t not in seen:
                seen.add(t)
                todo.add(t)
    return len(seen) == len(pool)


def _bonds_between(xs, ys) -> int:
    ys = set(ys)
    return sum(1 for s in xs for t in _neighbours(s) if t in ys)


@dataclass(frozen=True)
class PolymerModel:
    d: int
    gamma: float
    eta: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ArgumentError("d must be 1, 2 or 3")
        if not (self.gamma > 0 and self.eta >= 0 and math.isfinite(self.gamma) and math.isfinite(self.eta)):
            raise ArgumentError("gamma must be positive and eta nonnegative, both finite")

    def activity(self, x: Polymer) -> float:
        return math.exp(-self.gamma * len(x))

    def b(self, x: Polymer) -> float:
        return self.eta * self.d * len(x)


def enumerate_polymers(d: int, max_size: int, anchored: bool = True) -> dict[int, list[Polymer]]:
    """Connected sets containing the origin, grouped by size.

    Built by growth: every size-n set is a size-(n-1) member plus one boundary
    site, deduplicated.  With ``anchored=False`` only sets whose smallest site
    is the origin are kept (one representative per translation class).
    """
    if d not in MAX_SIZE:
        raise ArgumentError("d must be 1, 2 or 3")
    if not 1 <= max_size <= MAX_SIZE[d]:
        raise CapacityError(f"max_size limited to {MAX_SIZE[d]} in d={d}")
    return {n: list(v) for n, v in _grow(d, max_size, anchored).items()}


@lru_cache(maxsize=16)
def _grow(d: int, max_size: int, anchored: bool) -> dict[int, tuple[Polymer, ...]]:
    origin = (0,) * d
    layer = {frozenset([origin])}
    out = {1: layer}
    for n in range(2, max_size + 1):
        nxt = set()
        for s in layer:
            for site in s:
                for t in _neighbours(site):
                    if t not in s:
                        nxt.add(s | {t})
        out[n] = nxt
        layer = nxt
    res = {}
    for n, sets in out.items():
        polys = sorted(Polymer(tuple(s)) for s in sets)
        if not anchored:
            polys = [p for p in polys if p.sites[0] == origin]
        res[n] = tuple(polys)
    return res


def walk_bound(d: int, n: int) -> int:
    return (2 * d) ** (2 * n - 3) if n >= 2 else 1


def polymer_interaction(x: Polymer, y: Polymer, eta: float) -> float:
    """``inf`` on overlap, else ``-eta`` times the number of nearest-neighbour contacts."""
    if set(x.sites) & set(y.sites):
        return math.inf
    c = _bonds_between(x.sites, y.sites)
    return -eta * c if c else 0.0


def gamma_threshold(d: int, eta: float) -> float:
    """Sufficient activity decay rate, at ``a = (2d)^{-3/2}``."""
    if d < 1:
        raise ArgumentError("d must be positive")
    return 2 * (2 * d) ** -1.5 + 3 * d * eta + 2 * math.log(2 * d)


def optimal_a(d: int) -> float:
    return (2 * d) ** -1.5


@dataclass
class PolymerCriterion:
    lhs: float
    exact: float
    tail: float
    a: float
    ok: bool
    certifiable: bool = True
    ratio: float = 0.0


def _walk_tail(d: int, eta: float, kappa: float, n0: int) -> tuple[float, float]:
    """``sum_{n>n0} (2d)^{2n-3} (1 + 2 d eta n) e^{-n kappa}`` in closed form, with its ratio."""
    r = (2 * d) ** 2 * math.exp(-kappa)
    if r >= 1:
        return math.inf, r
    c = 2 * d * eta
    geo = r ** (n0 + 1) / (1 - r)
    lin = r ** (n0 + 1) * ((n0 + 1) - n0 * r) / (1 - r) ** 2
    return (geo + c * lin) / (2 * d) ** 3, r


def polymer_criterion(model: PolymerModel, a: float | None = None, n_cut: int = 6) -> PolymerCriterion:
    """Per-site smallness condition with ``a(x) = a|x|``.

    ``lhs = sum_{y containing 0} (1 + 2 d eta |y|) e^{-gamma|y|} e^{(a + eta d)|y|}``,
    summed exactly up to ``n_cut`` and bounded beyond by the walk count.
    """
    d, eta = model.d, model.eta
    a = optimal_a(d) if a is None else float(a)
    if n_cut > MAX_SIZE[d]:
        raise CapacityError(f"n_cut limited to {MAX_SIZE[d]} in d={d}")
    kappa = model.gamma - a - eta * d
    polys = enumerate_polymers(d, n_cut)
    exact = math.fsum(len(polys[n]) * (1 + 2 * d * eta * n) * math.exp(-n * kappa) for n in polys)
    tail, r = _walk_tail(d, eta, kappa, n_cut)
    if not math.isfinite(tail):
        return PolymerCriterion(math.inf, exact, tail, a, False, False, r)
    lhs = exact + tail
    return PolymerCriterion(lhs, exact, tail, a, lhs <= a, True, r)


# ---------------------------------------------------------------------------
# finite boxes


def box_polymers(d: int, box, max_size: int) -> list[Polymer]:
    """Every polymer of size <= ``max_size`` lying inside the box ``[0, L_1) x ... x [0, L_d)``."""
    box = tuple(int(L) for L in box)
    if len(box) != d or any(L < 0 for L in box):
        raise ArgumentError("box must list one nonnegative length per dimension")
    if any(L == 0 for L in box):
        return []
    shapes = enumerate_polymers(d, max_size, anchored=False)
    out = []
    for n in sorted(shapes):
        for shape in shapes[n]:
            for v in product(*(range(L) for L in box)):
                p = shape.translate(v)
                if all(0 <= c < L for s in p.sites for c, L in zip(s, box)):
                    out.append(p)
                    if len(out) > MAX_BOX_POLYMERS:
                        raise CapacityError(f"more than {MAX_BOX_POLYMERS} polymers in the box")
    return out


def induced_model(model: PolymerModel, polymers: list[Polymer], a: float | None = None) -> DiscreteModel:
    """Discrete model on a polymer list: weights ``e^{-gamma|x|}``, ``b = eta d |x|``, ``a(x) = a|x|``."""
    m = len(polymers)
    u = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(i, m):
            u[i, j] = u[j, i] = polymer_interaction(polymers[i], polymers[j], model.eta)
    sizes = np.array([len(p) for p in polymers], dtype=float)
    a = optimal_a(model.d) if a is None else a
    return DiscreteModel(np.exp(-model.gamma * sizes), ZetaMatrix.from_u(u),
                         model.eta * model.d * sizes, a * sizes)


def graded_log(Z: list[float]) -> list[float]:
    """Coefficients ``L_1..L_N`` of ``log(sum_n Z_n t^n)`` with ``Z_0 = 1``."""
    N = len(Z) - 1
    L = [0.0] * (N + 1)
    for n in range(1, N + 1):
        acc = n * Z[n] - math.fsum(j * L[j] * Z[n - j] for j in range(1, n))
        L[n] = acc / n
    return L[1:]


@dataclass
class BoxResult:
    Z: float
    logZ: float
    graded: list[float]
    partial_sums: list[float]
    gap: float
    n_polymers: int
    envelope_tail: float = math.inf
    certified: list[str] = field(default_factory=list)


def polymer_box_Z(model: PolymerModel, box, max_size: int, N: int = 8, a: float | None = None) -> BoxResult:
    """Exact box partition function and its cluster series up to order ``N``.

    Overlapping polymers exclude each other, so a family is a set of disjoint
    polymers tiling its union ``U``.  Its weight factorizes as
    ``e^{eta bonds(U)} prod_x e^{-gamma|x| - eta int(x)}``, and a subset DP
    over sites sums the tilings of every ``U`` graded by polymer count.  The
    cluster series order ``n`` is the ``t^n`` coefficient of ``log Z(t w)``.
    """
    polys = box_polymers(model.d, box, max_size)
    sites = sorted({s for p in polys for s in p.sites})
    nsites = len(sites)
    if nsites > MAX_BOX_SITES:
        raise CapacityError(f"box has {nsites} sites; limit {MAX_BOX_SITES}")
    if not polys:
        return BoxResult(1.0, 0.0, [], [0.0] * N, 0.0, 0, 0.0)
    index = {s: i for i, s in enumerate(sites)}
    masks = np.array([sum(1 << index[s] for s in p.sites) for p in polys], dtype=np.int64)
    weights = np.array([math.exp(-model.gamma * len(p) - model.eta * p.internal_bonds()) for p in polys])
    by_site = [[k for k, p in enumerate(polys) if masks[k] >> i & 1] for i in range(nsites)]
    ptr = np.cumsum([0] + [len(b) for b in by_site]).astype(np.int64)
    idx = np.array([k for b in by_site for k in b], dtype=np.int64)
    P = kernels.box_partition_graded(nsites, ptr, idx, masks, weights)
    U = np.arange(1 << nsites, dtype=np.int64)
    bonds = np.zeros(1 << nsites, dtype=np.int64)
    for s, i in index.items():
        for t in _neighbours(s):
            j = index.get(t)
            if j is not None and j > i:
                bonds += (U >> i) & (U >> j) & 1
    boltz = np.exp(model.eta * bonds)
    Zn = [math.fsum(boltz * P[:, n]) for n in range(nsites + 1)]
    Z = math.fsum(Zn)
    coeffs = (Zn + [0.0] * N)[: N + 1]
    L = graded_log(coeffs)
    partial = list(np.cumsum(L))
    logZ = math.log(Z)
    res = BoxResult(Z, logZ, L, partial, abs(logZ - partial[-1]), len(polys))
    if len(polys) <= MAX_BOX_POLYMERS:
        from .criteria import check_assumption

        dm = induced_model(model, polys, a)
        bnd = []
        for which, e in (("kp", 2), ("tree", 1)):
            if np.all(check_assumption(dm, which, dm.a) >= 0):
                res.certified.append(which)
                bnd.append(float(np.sum(np.abs(dm.weights) * np.expm1(dm.a) * np.exp(e * dm.b))))
        if bnd:
            res.envelope_tail = min(bnd) / (N + 1)
    return res
