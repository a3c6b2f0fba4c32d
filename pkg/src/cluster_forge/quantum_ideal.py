"""Fugacity thresholds for the quantum gas with a stable integrable pair potential.

Only the reduced condition is evaluated here:
``(beta ||U||_1 / (4 pi beta)^{d/2}) Li_{d/2}(z e^{a + beta B}) <= a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, optimize, special

from .errors import ArgumentError, PreconditionError, SingularityError

POLYLOG_TOL = 1e-12
EM_START = 64


@dataclass(frozen=True)
class QuantumParams:
    d: int
    beta: float
    U_norm: float
    B: float = 0.0
    statistics: str = "bosons"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ArgumentError("d must be a positive integer")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ArgumentError("beta must be positive and finite")
        if not (self.U_norm >= 0 and self.B >= 0 and math.isfinite(self.U_norm) and math.isfinite(self.B)):
            raise ArgumentError("U_norm and B must be finite and nonnegative")
        if self.statistics not in ("bosons", "fermions"):
            raise ArgumentError("statistics must be bosons or fermions")

    @property
    def coupling(self) -> float:
        """``beta ||U||_1 / (4 pi beta)^{d/2}``."""
        return self.beta * self.U_norm / (4 * math.pi * self.beta) ** (self.d / 2)


@dataclass
class PolylogValue:
    value: float
    remainder: float
    terms: int

    def __float__(self):
        return self.value


def _rising(s: float, i: int) -> float:
    out = 1.0
    for j in range(i):
        out *= s + j
    return out


def _deriv(s: float, lam: float, t: float, m: int) -> float:
    """``m``-th derivative of ``t^{-s} e^{lam t}``."""
    acc = 0.0
    for i in range(m + 1):
        acc += math.comb(m, i) * lam ** (m - i) * (-1) ** i * _rising(s, i) * t ** (-s - i)
    return math.exp(lam * t) * acc


def polylog(s: float, x: float, with_remainder: bool = False):
    """``Li_s(x) = sum_{k>=1} x^k / k^s`` for ``s > 0`` and ``0 <= x <= 1``.

    Far from 1 the series is summed until the geometric remainder bound
    ``x^{K+1} / ((K+1)^s (1-x))`` drops below ``1e-12``.  Otherwise the first
    terms are summed directly and the rest by Euler-Maclaurin: the summand
    ``t^{-s} e^{t log x}`` is completely monotone, so the remainder is bounded
    by the first omitted correction.
    """
    if s <= 0:
        raise ArgumentError("s must be positive")
    if not 0 <= x <= 1:
        raise ArgumentError("x must lie in [0, 1]")
    if x == 1 and s <= 1:
        raise SingularityError("Li_s(1) diverges for s <= 1")
    if x == 0:
        res = PolylogValue(0.0, 0.0, 0)
        return res if with_remainder else res.value
    if s == 1 and x < 1:
        res = PolylogValue(-math.log1p(-x), 0.0, 0)
        return res if with_remainder else res.value
    terms = []
    K = 0
    while K < 4096:
        K += 1
        terms.append(x ** K / K ** s)
        if x < 1:
            bound = x ** (K + 1) / ((K + 1) ** s * (1 - x))
            if bound < POLYLOG_TOL:
                res = PolylogValue(math.fsum(terms), bound, K)
                return res if with_remainder else res.value
        if K >= EM_START and x > 0.5:
            break
    lam = math.log(x)
    head = math.fsum(terms[:-1])
    f = lambda t: t ** (-s) * math.exp(lam * t)
    if s < 1:
        # int_K^inf t^{-s} e^{-mu t} dt = mu^{s-1} Gamma(1-s, mu K)
        mu = -lam
        integral = float(mu ** (s - 1) * special.gamma(1 - s) * special.gammaincc(1 - s, mu * K))
        qerr = 1e-15 * integral
    else:
        # t = K/u gives K^{1-s} int_0^1 u^{s-2} e^{lam K/u} du, smooth apart from the algebraic weight
        g = lambda u: math.exp(lam * K / u) if u > 0 else (1.0 if lam == 0 else 0.0)
        integral, qerr = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(s - 2, 0.0),
                                        epsabs=1e-16, epsrel=1e-13, limit=400)
        integral, qerr = integral * K ** (1 - s), qerr * K ** (1 - s)
    # sum_{k>=K} f(k) = int_K^inf f + f(K)/2 - sum_j B_{2j}/(2j)! f^{(2j-1)}(K) + R
    corr = f(K) / 2 - (1 / 12) * _deriv(s, lam, K, 1) + (1 / 720) * _deriv(s, lam, K, 3)
    remainder = abs(_deriv(s, lam, K, 5)) / 30240 + qerr
    res = PolylogValue(head + integral + corr, remainder, K)
    return res if with_remainder else res.value


def riemann_zeta(s: float) -> float:
    return polylog(s, 1.0)


def criterion_margin(p: QuantumParams, z: float, a: float) -> float:
    """``a - coupling * Li_{d/2}(z e^{a + beta B})``; ``-inf`` where the series diverges."""
    if z < 0 or a < 0:
        raise ArgumentError("z and a must be nonnegative")
    if p.U_norm == 0:
        return float(a)
    x = z * math.exp(a + p.beta * p.B)
    s = p.d / 2
    if x > 1 or (x == 1 and s <= 1):
        return -math.inf
    return a - p.coupling * polylog(s, x)


@dataclass
class ClosedForm:
    z_max: float
    born: float | None
    a_star: float


def zmax_closed(p: QuantumParams) -> ClosedForm:
    """Fugacity bound from ``z e^{a + beta B} = 1`` (needs ``d >= 3``).

    For ``d = 3`` the equivalent form ``exp(-zeta(3/2) a0 / sqrt(pi beta))``
    with ``a0 = ||U||_1 / (8 pi)`` is reported as well.
    """
    if p.d < 3:
        raise PreconditionError("closed form needs d >= 3; use zmax_optimized")
    zeta = riemann_zeta(p.d / 2)
    a_star = p.coupling * zeta
    z = math.exp(-a_star - p.beta * p.B)
    born = None
    if p.d == 3:
        a0 = p.U_norm / (8 * math.pi)
        born = math.exp(-zeta * a0 / math.sqrt(math.pi * p.beta) - p.beta * p.B)
    return ClosedForm(z, born, a_star)


def _x_admissible(p: QuantumParams, a: float) -> float:
    """Largest ``x = z e^{a + beta B}`` with ``coupling Li_{d/2}(x) <= a``."""
    s = p.d / 2
    if p.U_norm == 0:
        return 1.0
    target = a / p.coupling
    if s > 1 and polylog(s, 1.0) <= target:
        return 1.0
    if s == 1:
        return -math.expm1(-target)
    hi = 1.0
    if s < 1:
        k = 1
        while polylog(s, 1 - 10.0 ** -k) < target:
            k += 1
            if k > 15:
                return 1 - 1e-15
        hi = 1 - 10.0 ** -k
    return optimize.brentq(lambda x: polylog(s, x) - target, 0.0, hi, xtol=1e-15, rtol=1e-14)


@dataclass
class Optimized:
    z_max: float
    a_opt: float


def zmax_optimized(p: QuantumParams, bracket=(1e-6, 20.0)) -> Optimized:
    """Maximize the admissible fugacity ``x(a) e^{-a - beta B}`` over ``a`` in ``bracket``."""
    lo, hi = bracket
    zfun = lambda a: _x_admissible(p, a) * math.exp(-a - p.beta * p.B)
    res = optimize.minimize_scalar(lambda a: -zfun(a), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-10})
    cands = [(zfun(res.x), res.x), (zfun(lo), lo), (zfun(hi), hi)]
    if p.d >= 3:
        a_c = zmax_closed(p).a_star
        if lo <= a_c <= hi:
            cands.append((zfun(a_c), a_c))
    z, a = max(cands)
    return Optimized(float(z), float(a))
