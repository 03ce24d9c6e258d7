import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from edgelab.semicircle import (
    SpectralPoint,
    classical_locations,
    gamma,
    msc,
    n_sc,
    rho_sc,
    semicircle_value,
)


def fixed_point_residual(z):
    m = msc(z)
    return np.abs(m + 1.0 / (z + m))


def test_msc_near_edge_is_minus_one():
    assert abs(msc(2 + 1e-12j) - (-1)) < 1e-5


def test_msc_at_i():
    # root of m^2 + i m + 1 = 0 with positive imaginary part
    roots = np.roots([1, 1j, 1])
    want = roots[np.argmax(roots.imag)]
    assert abs(msc(1j) - want) < 1e-15
    assert abs(msc(1j) - 1j * (math.sqrt(5) - 1) / 2) < 1e-15


def test_msc_rejects_real_axis():
    with pytest.raises(ValueError):
        msc(0.5 + 0j)
    with pytest.raises(ValueError):
        SpectralPoint(0.5, 0.0)


def test_fixed_point_on_domain_grid():
    N = 1000
    E = np.linspace(-5, 5, 40)
    eta = np.geomspace(1.0 / N, 10.0, 25)
    z = (E[:, None] + 1j * eta[None, :]).ravel()
    assert z.size == 1000
    assert fixed_point_residual(z).max() <= 1e-12
    m = msc(z)
    assert np.all(m.imag > 0)
    assert np.all(np.abs(m) <= 1 + 1e-15)


@given(st.floats(-10, 10), st.floats(1e-9, 10))
def test_fixed_point_and_bound_property(E, eta):
    z = complex(E, eta)
    assert fixed_point_residual(z) <= 1e-12
    assert abs(msc(z)) <= 1 + 1e-14
    assert msc(z).imag > 0


def test_outside_spectrum_imaginary_scale():
    E = np.concatenate([np.linspace(2.01, 5, 30), -np.linspace(2.01, 5, 30)])
    eta = np.geomspace(1e-6, 1e-2, 20)
    EE, HH = np.meshgrid(E, eta)
    kappa = np.abs(np.abs(EE) - 2)
    im = msc(EE + 1j * HH).imag
    ratio = im / (HH / np.sqrt(kappa + HH))
    # at |E| = 5 the exact ratio is ~0.079, so the window is [1/20, 10]
    assert ratio.min() >= 0.05 and ratio.max() <= 10
    # first order in eta << kappa: Im m = eta (|E| / sqrt(E^2 - 4) - 1) / 2
    lin = HH * (np.abs(EE) / np.sqrt(EE**2 - 4) - 1) / 2
    small = HH <= 1e-3 * kappa
    assert np.max(np.abs(im / lin - 1)[small]) < 1e-2


def test_rho_values():
    assert rho_sc(0.0) == pytest.approx(1 / math.pi, abs=1e-15)
    assert rho_sc(2.0) == 0.0 and rho_sc(-2.0) == 0.0
    assert rho_sc(3.0) == 0.0


def test_n_sc_values():
    assert n_sc(0.0) == pytest.approx(0.5, abs=1e-15)
    assert n_sc(2.0) == 1.0 and n_sc(5.0) == 1.0
    assert n_sc(-2.0) == 0.0 and n_sc(-7.0) == 0.0


@pytest.mark.parametrize("E", [-1.9, -1.0, -0.3, 0.0, 0.7, 1.0, 1.5, 1.99])
def test_n_sc_matches_quadrature(E):
    with mpmath.workdps(30):
        want = float(mpmath.quad(lambda x: mpmath.sqrt(4 - x * x) / (2 * mpmath.pi), [-2, E]))
    assert abs(n_sc(E) - want) <= 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_n_sc_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert 0 <= n_sc(lo) <= n_sc(hi) <= 1


def test_gamma_special_values():
    assert gamma(50, 50) == 2.0
    assert gamma(25, 50) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        gamma(0, 10)
    with pytest.raises(ValueError):
        gamma(11, 10)


def test_gamma_first_of_ten_against_brentq():
    want = optimize.brentq(lambda g: n_sc(g) - 0.1, -2, 2, xtol=1e-15)
    assert abs(gamma(1, 10) - want) < 1e-12


@pytest.mark.parametrize("N", [1, 2, 3, 10, 137, 1000, 10_000])
def test_gamma_inversion(N):
    g = classical_locations(N)
    j = np.arange(1, N + 1)
    assert np.max(np.abs(N * n_sc(g) - j)) <= 1e-8
    assert np.all(np.diff(g) > 0)
    assert g[0] >= -2 and g[-1] == 2.0


def test_semicircle_value_bundle():
    v = semicircle_value(SpectralPoint(0.3, 0.01))
    assert v.m == msc(0.3 + 0.01j)
    assert v.rho == rho_sc(0.3) and v.ncdf == n_sc(0.3)
    assert SpectralPoint(-2.5, 0.1).kappa == pytest.approx(0.5)
