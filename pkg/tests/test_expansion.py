import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cluster_forge import combin, criteria, expansion as ex, subsetalg as sa
from cluster_forge.errors import CapacityError, PreconditionError


def hc_model(w, offdiag, b=None, a=None):
    w = np.asarray(w, dtype=complex)
    u = np.array(offdiag, dtype=complex)
    np.fill_diagonal(u, np.inf)
    return ex.DiscreteModel.from_u(w, u) if b is None else ex.DiscreteModel(
        w, sa.ZetaMatrix.from_u(u), np.asarray(b, float), np.asarray(a, float))


def family(seed, m=3, kind="repulsive"):
    rng = np.random.default_rng(seed)
    return criteria.random_model(rng, m, kind, margin=0.1, variants=("kp", "tree"))


# ---- Ursell coefficients ------------------------------------------------


def test_ursell_small_cases(rng):
    assert ex.ursell_phi(sa.ZetaMatrix(np.zeros((1, 1)))) == 1
    z = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    z = sa.ZetaMatrix(z + z.T)
    a, b, c = z.zeta[0, 1], z.zeta[0, 2], z.zeta[1, 2]
    assert ex.ursell_phi(z.restrict([1, 2])) == pytest.approx(a / 2)
    assert ex.ursell_phi(z) == pytest.approx((a * b + a * c + b * c + a * b * c) / 6)


def test_ursell_matches_graph_enumeration(rng):
    n = 5
    z = rng.normal(size=(n, n))
    z = sa.ZetaMatrix(z + z.T)
    direct = sum(np.prod([z.zeta[i - 1, j - 1] for i, j in g.edges]) for g in combin.enumerate_connected(n))
    assert ex.ursell_phi(z) == pytest.approx(direct / math.factorial(n), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_ursell_permutation_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    z = z + z.T
    p = rng.permutation(n)
    v1 = ex.ursell_phi(sa.ZetaMatrix(z))
    v2 = ex.ursell_phi(sa.ZetaMatrix(z[np.ix_(p, p)]))
    assert abs(v1 - v2) <= 1e-10 * max(1, abs(v1))


def test_ursell_cap():
    with pytest.raises(CapacityError):
        ex.ursell_phi(sa.ZetaMatrix(np.zeros((ex.MAX_URSELL + 1,) * 2)))


# ---- brute-force oracles --------------------------------------------------


def test_bruteforce_Z_examples():
    empty = ex.DiscreteModel(np.zeros(0), sa.ZetaMatrix(np.zeros((0, 0))))
    assert ex.bruteforce_Z(empty) == 1
    assert ex.bruteforce_Z(hc_model([0.37], [[0]])) == pytest.approx(1.37, abs=1e-15)
    w1, w2, u = 0.2 + 0.1j, 0.3, 0.8
    m = hc_model([w1, w2], [[0, u], [u, 0]])
    expect = 1 + w1 + w2 + w1 * w2 * math.exp(-u)
    assert ex.bruteforce_Z(m) == pytest.approx(expect, abs=1e-15)


def test_bruteforce_Z_free_kernel():
    w = np.array([0.4, -0.1 + 0.3j, 0.25])
    m = ex.DiscreteModel(w, sa.ZetaMatrix(np.zeros((3, 3))))
    assert abs(ex.bruteforce_Z(m) - np.exp(w.sum())) <= 1e-13


def test_bruteforce_Z_against_tuple_sum():
    """Independent oracle: sum over n-tuples with 1/n! and the pair product."""
    w = np.array([0.3, 0.2 - 0.1j])
    u = np.array([[0.7, 0.2], [0.2, 1.5]])
    m = ex.DiscreteModel.from_u(w, u)
    one_plus = np.exp(-u)
    tot = 0j
    for n in range(0, 26):
        s = 0j
        for xs in itertools.product(range(2), repeat=n):
            p = np.prod([w[x] for x in xs]) if n else 1.0
            for i, j in itertools.combinations(range(n), 2):
                p *= one_plus[xs[i], xs[j]]
            s += p
        tot += s / math.factorial(n)
        if n >= 8 and abs(s) / math.factorial(n) < 1e-18:
            break
    assert ex.bruteforce_Z(m) == pytest.approx(tot, abs=1e-13)


def test_bruteforce_corr_examples():
    m = hc_model([0.0, 0.0], [[0, 0.4], [0.4, 0]])
    assert ex.bruteforce_corr(m, 0) == 1
    assert ex.bruteforce_corr(m, [0, 1]) == pytest.approx(math.exp(-0.4))
    g = hc_model([0.2, 0.15 + 0.05j, 0.1], [[0, 0.3, 1.0], [0.3, 0, 0.6], [1.0, 0.6, 0]])
    mod = g.with_weights((1 + g.zeta[1]) * g.weights)
    assert ex.bruteforce_corr(g, 1) == pytest.approx(ex.bruteforce_Z(mod), abs=1e-14)


# ---- cluster series -------------------------------------------------------


def test_single_state_series():
    w = 0.3
    m = hc_model([w], [[0]], b=[0.0], a=[1.0])
    r = ex.cluster_logZ(m, N=12)
    for N, s in enumerate(r.partial_sums, 1):
        assert s == pytest.approx(sum((-1) ** (n - 1) * w**n / n for n in range(1, N + 1)), abs=1e-15)
    r = ex.cluster_logZ(m, tol=1e-14)
    assert abs(r.value - math.log1p(w)) <= 1e-13


def test_connected_sign_sum():
    for n in range(1, 6):
        s = sum((-1) ** len(g.edges) for g in combin.enumerate_connected(n))
        assert s == (-1) ** (n - 1) * math.factorial(n - 1)


def test_first_order_is_total_weight():
    m = family(3)
    r = ex.cluster_logZ(m, N=1)
    assert r.value == pytest.approx(m.weights.sum())


@pytest.mark.parametrize("seed", range(5))
def test_three_state_oracle(seed):
    m = family(seed)
    r = ex.cluster_logZ(m, N=12, oracle=True)
    assert r.oracle_gap <= 1e-8
    assert r.variant in ("kp", "tree")


def test_series_envelope_and_monotone():
    for seed in range(6):
        m = family(100 + seed, m=4, kind=("repulsive", "mixed", "hardcore")[seed % 3])
        r = ex.cluster_logZ(m, tol=1e-12)
        a, b = m.a_values(), m.b_values()
        for x, sums in r.abs_partial.items():
            assert all(s2 >= s1 for s1, s2 in zip(sums, sums[1:]))
            assert sums[-1] <= math.expm1(a[x]) * math.exp(b[x]) * (1 + 1e-10)
            assert sums[-1] <= math.expm1(a[x]) * math.exp(2 * b[x]) * (1 + 1e-10)
        assert math.isfinite(r.tail_bound)


def test_uncertified_model_refused():
    m = ex.DiscreteModel.from_u(np.array([3.0]), np.array([[np.inf]]))
    with pytest.raises(PreconditionError):
        ex.cluster_logZ(m)
    r = ex.cluster_logZ(m, N=4, certify=False)
    assert r.variant is None and math.isinf(r.tail_bound)


def test_non_hardcore_diagonal_oracle():
    w = np.array([0.05, 0.04 + 0.01j])
    u = np.array([[0.5, 0.3], [0.3, 1.0]])
    m = ex.DiscreteModel(w, sa.ZetaMatrix.from_u(u), np.zeros(2), np.full(2, 0.5))
    r = ex.cluster_logZ(m, tol=1e-14, oracle=True)
    assert r.oracle_gap <= 1e-12


# ---- correlation functions ------------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_zhat_identities(seed):
    m = family(seed + 10)
    N = ex.cluster_logZ(m, tol=1e-13).order
    Z = ex.bruteforce_Z(m)
    assert ex.cluster_zhat(m, 0, 1) == 1
    for x in range(m.size):
        assert abs(ex.bruteforce_corr(m, x) / Z - ex.cluster_zhat(m, x, N)) <= 1e-6
    for x, y in itertools.combinations(range(m.size), 2):
        two = ex.bruteforce_corr(m, [x, y]) / Z
        lhs = two - ex.cluster_zhat(m, x, N) * ex.cluster_zhat(m, y, N)
        assert abs(lhs - ex.cluster_zhat(m, [x, y], N)) <= 1e-6
    one, pair = ex.zhat_all(m, N)
    assert one[1] == pytest.approx(ex.cluster_zhat(m, 1, N), abs=1e-14)
    assert pair[0, 1] == pytest.approx(ex.cluster_zhat(m, [0, 1], N), abs=1e-14)


def test_k_envelope():
    m = family(42, m=3)
    rep = ex.k_envelope(m, 0, 6)
    b, a = m.b_values()[0], m.a_values()[0]
    assert rep.K[0] == pytest.approx(math.exp(2 * b))
    assert all(k2 >= k1 - 1e-15 for k1, k2 in zip(rep.K, rep.K[1:]))
    assert rep.K[-1] <= math.exp(a + 2 * b) * (1 + 1e-12)
    tree = ex.k_envelope(m, 0, 6, variant="tree")
    assert tree.K[-1] <= math.exp(a + b) * (1 + 1e-12)


def test_decay_bound_examples():
    m = family(5, m=3)
    z, a, b = m.zeta, m.a_values(), m.b_values()
    got = ex.decay_bound_rhs(m, 0, 1, M=0)
    expect = abs(z[0, 1]) * math.exp(a[0] + 2 * b[0]) * math.exp(a[1] + 2 * b[1])
    assert got == pytest.approx(expect)
    free = ex.DiscreteModel(np.array([0.1, 0.1]), sa.ZetaMatrix(np.zeros((2, 2))), np.zeros(2), np.ones(2))
    assert ex.decay_bound_rhs(free, 0, 1) == 0
    N = ex.cluster_logZ(m, tol=1e-13).order
    _, pair = ex.zhat_all(m, N)
    for x, y in itertools.combinations(range(3), 2):
        for v in ("kp", "tree"):
            assert abs(pair[x, y]) <= ex.decay_bound_rhs(m, x, y, variant=v) + 1e-10


def test_occupation_table_ranks():
    t = ex.OccupationTable(3, 4)
    assert len(t) == math.comb(3 + 4, 4)
    assert np.array_equal(t.rank(t.vectors), np.arange(len(t)))
