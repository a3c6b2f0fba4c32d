import math

import mpmath
import numpy as np
import pytest

from cluster_forge import classical as cl
from cluster_forge.errors import ModelError


def lagrange_coefficients(sigma, n_max):
    """Pressure coefficients of the hard-rod gas from inverting z = y e^{sigma y}."""
    with mpmath.workdps(30):
        c = mpmath.taylor(lambda z: mpmath.lambertw(sigma * z) / sigma, 0, n_max)
    return [float(v) for v in c[1:]]


def test_mayer_norm_integral():
    assert cl.mayer_norm_integral(cl.hard_rod(0.7)) == pytest.approx(1.4, abs=1e-12)
    assert cl.mayer_norm_integral(cl.PairPotential(d=1)) == 0
    assert cl.mayer_norm_integral(cl.hard_sphere(0.8, d=3)) == pytest.approx(4 * math.pi / 3 * 0.8**3, rel=1e-12)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_criterion_hard_rods(sigma):
    p = cl.hard_rod(sigma, z=0.1)
    for mode in ("rue", "brf"):
        assert cl.criterion_classical(p, mode).z_max == pytest.approx(1 / (2 * math.e * sigma), abs=1e-12)
    best = cl.criterion_classical(p, "rue").z_max
    for da in (-0.1, 0.1):
        assert cl.criterion_classical(p, "rue", a=1 + da).z_max <= best


def test_criterion_free_gas_unbounded():
    r = cl.criterion_classical(cl.PairPotential(d=3, z=0.4), "rue")
    assert r.unbounded and math.isinf(r.z_max)


def test_stability_constant_required():
    with pytest.raises(ModelError):
        cl.square_well(1.0, 1.5, 0.5, B=0.0)


def test_mayer_examples():
    p = cl.hard_rod(1.3)
    assert cl.mayer_coefficient(p, 1).value == 1
    assert cl.mayer_coefficient(p, 2).value == pytest.approx(-1.3, abs=1e-12)
    assert cl.mayer_coefficient(p, 3).value == pytest.approx(1.5 * 1.3**2, abs=1e-12)


@pytest.mark.parametrize("sigma", [1.0, 0.6])
def test_hard_rod_against_lagrange_inversion(sigma):
    oracle = lagrange_coefficients(sigma, 5)
    p = cl.hard_rod(sigma)
    for n in range(1, 6):
        exact = cl.mayer_coefficient(p, n, "exact1d").value
        assert exact == pytest.approx(oracle[n - 1], abs=1e-6)
        assert cl.hard_rod_coefficient(n, sigma) == pytest.approx(oracle[n - 1], rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mc_agrees_with_exact(n):
    p = cl.hard_rod(1.0)
    exact = cl.mayer_coefficient(p, n, "exact1d").value
    r = cl.mayer_coefficient(p, n, "mc", seed=11, samples=1 << 14)
    assert r.stderr > 0
    assert abs(r.value - exact) <= 3 * r.stderr


def test_mc_square_well_second_coefficient():
    p = cl.square_well(1.0, 1.5, 0.5, B=3.0, d=3)
    v = 4 * math.pi / 3
    exact = 0.5 * (-v + math.expm1(0.5) * v * (1.5**3 - 1))
    r = cl.mayer_coefficient(p, 2, "mc", seed=2, samples=1 << 14)
    assert abs(r.value - exact) <= 4 * r.stderr


def test_mc_thread_independent():
    p = cl.hard_sphere(0.5, d=2)
    a = cl.mayer_coefficient(p, 3, "mc", seed=5, samples=1 << 13, threads=1)
    b = cl.mayer_coefficient(p, 3, "mc", seed=5, samples=1 << 13, threads=3)
    assert a.value == b.value and a.stderr == b.stderr


def test_pressure_examples():
    p = cl.hard_rod(1.0)
    assert cl.pressure_partial_sum(p, 1, z=0.03).value == pytest.approx(0.03)
    assert cl.pressure_partial_sum(p, 4, z=0.0).value == 0
    r = cl.pressure_partial_sum(p, 4, z=0.05)
    b5 = cl.hard_rod_coefficient(5, 1.0)
    assert r.gap <= 2 * abs(b5) * 0.05**5
    assert r.oracle == pytest.approx(cl.tonks_pressure(1.0, 0.05), rel=1e-15)
    y = cl.tonks_pressure(1.0, 0.05)
    assert y * math.exp(y) == pytest.approx(0.05, rel=1e-14)


def test_decay_constants():
    p = cl.hard_rod(0.9, z=0.05)
    r0 = cl.decay_constants(p, 0.0)
    assert r0.C1 == pytest.approx(1.8) and r0.Cinf == pytest.approx(1.0)
    r = cl.decay_constants(p, 0.5)
    assert r.C1 == pytest.approx(2 * math.expm1(0.5 * 0.9) / 0.5, rel=1e-9)
    assert cl.decay_constants(p, 3.0, z=1e-9).ok
