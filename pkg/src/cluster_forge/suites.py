"""Randomized verification suites shared by the command line and the test-suite.

Trial ``t`` of suite ``s`` draws from ``default_rng([seed, s_id, t])``, so a
suite's outcome depends only on ``(seed, trials)`` and not on how trials are
spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import criteria, expansion, subsetalg
from .errors import ClusterForgeError

TOL = {
    "algebra": 1e-10,
    "ks": 1e-9,
    "tree_bound": criteria.PROP1_RTOL,
    "logz": 1e-8,
    "correlations": 1e-6,
    "decay": 0.0,
}
KINDS = ("repulsive", "mixed", "hardcore")
ALIASES = {"prop1": "tree_bound"}


@dataclass
class SuiteResult:
    name: str
    trials: int
    passed: int
    worst: float
    tol: float
    failures: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.trials


def _rng(seed: int, name: str, t: int) -> np.random.Generator:
    sid = sorted(TOL).index(name) if name in TOL else 99
    return np.random.default_rng([seed, sid, t])


def _stable_instance(rng, n, kind):
    if kind == "mixed":
        return criteria.random_mixed(rng, n)
    return criteria.random_repulsive(rng, n, hard_core=0.6 if kind == "hardcore" else 0.2)


def trial_algebra(rng) -> tuple[bool, float]:
    n = int(rng.integers(2, 7))
    r = np.sqrt(rng.random((n, n)))
    zeta = r * np.exp(2j * np.pi * rng.random((n, n)))
    zeta = np.triu(zeta, 1)
    z = subsetalg.ZetaMatrix(zeta + zeta.T)
    phi, psi = subsetalg.phi_psi(z)
    res = float(np.max(np.abs(subsetalg.alg_exp(phi).values - psi.values)))
    return res <= TOL["algebra"], res


def trial_ks(rng, t=0) -> tuple[bool, float]:
    n = int(rng.integers(2, 7))
    z, b = _stable_instance(rng, n, KINDS[t % 3])
    labels = rng.permutation(np.arange(1, n + 1))
    k = int(rng.integers(1, n + 1))
    j = int(rng.integers(0, n - k + 1))
    I, J = sorted(labels[:k].tolist()), sorted(labels[k:k + j].tolist())
    g1 = subsetalg.ks_g(z, b, I, J, "recursive")
    g2 = subsetalg.ks_g(z, b, I, J, "direct")
    h1 = subsetalg.ks_h(z, b, I, J, "recursive")
    h2 = subsetalg.ks_h(z, b, I, J, "forest")
    scale = max(1.0, abs(h1))
    res = max(abs(g1 - g2) / max(1.0, abs(g1)), abs(h1 - h2) / scale)
    ok = res <= TOL["ks"] and abs(g1) <= h1 * (1 + TOL["ks"])
    return ok, res


def trial_tree_bound(rng, t=0) -> tuple[bool, float]:
    n = int(rng.integers(2, 7))
    z, b = _stable_instance(rng, n, KINDS[t % 3])
    worst = -math.inf
    ok = True
    for mode in ("a", "b"):
        lhs, rhs, good = criteria.verify_prop1(z, b, mode)
        ok &= good
        worst = max(worst, lhs / rhs - 1 if rhs > 0 else (0.0 if lhs == 0 else math.inf))
    return ok, worst


def model_family(rng, t: int) -> expansion.DiscreteModel:
    """Hard-core-diagonal models with 2..5 states certified with margin 0.1 under both criteria."""
    m = int(rng.integers(2, 6))
    return criteria.random_model(rng, m, KINDS[t % 3], margin=0.1, variants=("kp", "tree"))


def trial_logz(rng, t=0) -> tuple[bool, float]:
    model = model_family(rng, t)
    r = expansion.cluster_logZ(model, tol=1e-13, oracle=True)
    return r.oracle_gap <= TOL["logz"], r.oracle_gap


def trial_correlations(rng, t=0) -> tuple[bool, float]:
    model = model_family(rng, t)
    r = expansion.cluster_logZ(model, tol=1e-13)
    N = r.order
    Z = expansion.bruteforce_Z(model)
    worst = 0.0
    zh, zh2 = expansion.zhat_all(model, N)
    for x in range(model.size):
        worst = max(worst, abs(expansion.bruteforce_corr(model, x) / Z - zh[x]))
        for y in range(x + 1, model.size):
            two = expansion.bruteforce_corr(model, [x, y]) / Z
            worst = max(worst, abs(two - zh[x] * zh[y] - zh2[x, y]))
    return worst <= TOL["correlations"], float(worst)


def trial_decay(rng, t=0) -> tuple[bool, float]:
    """Largest ``|Zhat(x,y)| - rhs`` over pairs and both variants (pass when <= 0)."""
    model = model_family(rng, t)
    N = expansion.cluster_logZ(model, tol=1e-13).order
    _, zh2 = expansion.zhat_all(model, N)
    worst = -math.inf
    for x in range(model.size):
        for y in range(x + 1, model.size):
            v = abs(zh2[x, y])
            for variant in ("kp", "tree"):
                worst = max(worst, v - expansion.decay_bound_rhs(model, x, y, variant=variant))
    return worst <= TOL["decay"], float(worst)


TRIALS = {
    "algebra": lambda rng, t: trial_algebra(rng),
    "ks": trial_ks,
    "tree_bound": trial_tree_bound,
    "logz": trial_logz,
    "correlations": trial_correlations,
    "decay": trial_decay,
}


def _one(name: str, seed: int, t: int) -> tuple[bool, float]:
    try:
        return TRIALS[name](_rng(seed, name, t), t)
    except ClusterForgeError:
        return False, math.inf


def run_suite(name: str, trials: int, seed: int = 0, threads: int = 1) -> SuiteResult:
    name = ALIASES.get(name, name)
    if name not in TRIALS:
        raise KeyError(name)
    work = lambda t: _one(name, seed, t)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(work, range(trials)))
    else:
        out = [work(t) for t in range(trials)]
    fails = [t for t, (ok, _) in enumerate(out) if not ok]
    worst = max((r for _, r in out), default=0.0)
    return SuiteResult(name, trials, trials - len(fails), worst, TOL[name], fails)
