import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import make_device
from nanotrap.beam import (
    beam_mode,
    clamped_mode_roots,
    integrate,
    mode_frequency,
    mode_shape_eval,
    peak_effective_mass_fraction,
)
from nanotrap.coupling import coupling_rate


def _bisect(f, a, b, tol=1e-14):
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
        if b - a < tol:
            break
    return 0.5 * (a + b)


def _oracle_root(n):
    # cos r cosh r - 1, scaled by cosh so it stays O(1)
    return _bisect(lambda r: math.cos(r) - 1 / math.cosh(r), (n + 0.5) * math.pi - 0.3, (n + 0.5) * math.pi + 0.3)


def test_roots_match_bisection_oracle():
    roots = clamped_mode_roots(8)
    for n, r in enumerate(roots, start=1):
        assert r == pytest.approx(_oracle_root(n), abs=1e-10)
    assert roots[0] == pytest.approx(4.730040744862704, abs=1e-12)
    assert roots[1] == pytest.approx(7.853204624095838, abs=1e-12)


def test_root_residual_scaled():
    for r in clamped_mode_roots(12):
        assert abs(math.cos(r) * math.cosh(r) - 1) / math.cosh(r) < 1e-9


def test_frequency_ordering_and_dispersion():
    dev = make_device()
    w = [mode_frequency(dev, n) for n in range(1, 9)]
    r = clamped_mode_roots(8)
    assert all(b > a for a, b in zip(w, w[1:]))
    for n in range(8):
        assert w[n] / w[0] == pytest.approx((r[n] / r[0]) ** 2, rel=1e-9)


def test_textbook_fundamental():
    dev = make_device()
    I2 = math.pi * dev.r0**4 / 4
    mu = dev.volumetric_density * math.pi * dev.r0**2
    w1 = (4.730040744862704 / (2 * dev.half_length)) ** 2 * math.sqrt(dev.youngs_modulus * I2 / mu)
    assert mode_frequency(dev, 1) == pytest.approx(w1, rel=1e-9)
    # rad/s reading of the quoted "1 GHz" (factor-3 tolerance)
    assert 1e9 / 3 <= w1 <= 3e9


def test_doubling_length_quarters_frequency():
    dev = make_device()
    dev2 = replace(dev, half_length=2 * dev.half_length)
    for n in (1, 2, 5):
        assert mode_frequency(dev2, n) == pytest.approx(mode_frequency(dev, n) / 4, rel=1e-12)


def _closed_shape(y, L):
    # a0 [cos(q y) cosh(q L) - cosh(q y) cos(q L)], normalized independently
    q = 4.730040744862704 / (2 * L)
    return math.cos(q * y) * math.cosh(q * L) - math.cosh(q * y) * math.cos(q * L)


def test_fundamental_matches_closed_expression():
    dev = make_device()
    L = dev.half_length
    sq, _ = quad(lambda y: _closed_shape(y, L) ** 2, -L, L, epsabs=0, epsrel=1e-13)
    a0 = math.sqrt(2 * L / sq)
    m = beam_mode(dev, 1)
    assert m.center_value == pytest.approx(a0 * _closed_shape(0.0, L), rel=1e-10)
    assert m.center_value == pytest.approx(1.588, abs=5e-4)
    for y in np.linspace(-L, L, 9):
        assert m.shape(y) == pytest.approx(a0 * _closed_shape(y, L), abs=1e-10)


@pytest.mark.parametrize("n", range(1, 7))
def test_clamped_boundary_and_normalization(n):
    dev = make_device()
    m = beam_mode(dev, n)
    L = dev.half_length
    assert abs(m.shape(L)) < 1e-9 and abs(m.shape(-L)) < 1e-9
    assert abs(m.slope(L)) * L < 1e-8 and abs(m.slope(-L)) * L < 1e-8
    norm, _ = quad(lambda y: float(m.shape(y)) ** 2, -L, L, epsrel=1e-12, limit=200)
    assert norm == pytest.approx(2 * L, rel=1e-9)


def test_parity_and_orthogonality():
    dev = make_device()
    L = dev.half_length
    m1, m2, m3 = (beam_mode(dev, n) for n in (1, 2, 3))
    y = np.linspace(0, L, 7)
    assert np.allclose(m1.shape(-y), m1.shape(y))
    assert np.allclose(m2.shape(-y), -m2.shape(y))
    for a, b in ((m1, m2), (m1, m3), (m2, m3)):
        ov, _ = quad(lambda t: float(a.shape(t) * b.shape(t)), -L, L, epsabs=1e-11 * L, limit=200)
        assert abs(ov) < 1e-8 * 2 * L


def test_domain_error():
    with pytest.raises(ValueError):
        mode_shape_eval(make_device(), 1, 300e-9)
    with pytest.raises(ValueError):
        beam_mode(make_device(), 0)


def test_integrate_matches_quad():
    f = lambda y: np.exp(-y * y) * np.cos(3 * y)  # noqa: E731
    ref, _ = quad(f, -2, 2, epsabs=0, epsrel=1e-13)
    assert integrate(f, -2, 2) == pytest.approx(ref, rel=1e-12)


def test_lambda_normalization_invariance():
    """u1(0)/sqrt(M_p) is the invariant: peak normalization gives the same coupling."""
    dev = make_device()
    m = beam_mode(dev, 1)
    L = dev.half_length
    # independent effective-mass fraction with unit peak shape
    sq, _ = quad(lambda y: (_closed_shape(y, L) / _closed_shape(0, L)) ** 2, -L, L, epsrel=1e-12)
    frac = sq / (2 * L)
    assert frac == pytest.approx(0.396, abs=1e-3)
    assert peak_effective_mass_fraction(m) == pytest.approx(frac, rel=1e-9)
    ratio = 1e-4
    lam_int = coupling_rate(2 * math.pi * 1e9, m.center_value, ratio)
    lam_peak = coupling_rate(2 * math.pi * 1e9, 1.0, ratio / frac)
    assert lam_peak == pytest.approx(lam_int, rel=1e-2)
