import math
import warnings

import mpmath
import numpy as np
import pytest
from scipy import special

from edgelab.airy import AIRY_RANGE, ai, airy, airy_asymptotic
from edgelab.tracywidom import (
    fredholm_f2,
    fredholm_f2_checked,
    hastings_mcleod,
    tw_cdf,
    tw_mean,
    tw_pdf,
    tw_quantile,
    tw_table,
)


@pytest.fixture(scope="module")
def table():
    return tw_table()


# ---------------------------------------------------------------- Airy


def test_airy_at_zero():
    want = 3 ** (-2 / 3) / math.gamma(2 / 3)
    assert abs(ai(0.0) - want) < 1e-15
    assert abs(ai(0.0) - 0.3550280539) < 1e-10


@pytest.mark.parametrize("s", [-40, -31.7, -12.5, -5.2, -1, -0.3, 0.4, 1.9, 2.1, 4.99, 5.01, 8, 10, 17.3, 25, 40])
def test_airy_against_mpmath(s):
    a, ap = airy(s)
    want = float(mpmath.airyai(s))
    wantp = float(mpmath.airyai(s, derivative=1))
    # relative accuracy, absolute near the oscillatory zeros
    assert abs(a - want) <= 1e-10 * max(abs(want), 1e-3 if s < 0 else 0)
    assert abs(ap - wantp) <= 1e-10 * max(abs(wantp), 1e-2 if s < 0 else 0)


def test_airy_dense_grid_against_scipy():
    s = np.linspace(-20, 20, 2001)
    got = np.array([airy(v)[0] for v in s])
    want = special.airy(s)[0]
    scale = np.where(s < 0, np.maximum(np.abs(want), 1e-3), np.abs(want))
    assert np.max(np.abs(got - want) / scale) <= 1e-10


def test_airy_decay_and_asymptotic_overlap():
    assert 0 < ai(10) < 1e-9
    for s in (8, 10, 15, 30):
        assert abs(ai(s) / airy_asymptotic(s)[0] - 1) < 1e-10


def test_airy_ode_residual():
    h = 5e-3
    s = np.linspace(-8, 8, 161)
    f = np.array([[ai(v + k * h) for k in (-2, -1, 0, 1, 2)] for v in s])
    second = (-f[:, 0] + 16 * f[:, 1] - 30 * f[:, 2] + 16 * f[:, 3] - f[:, 4]) / (12 * h**2)
    assert np.max(np.abs(second - s * f[:, 2])) <= 1e-8


def test_airy_range():
    with pytest.raises(ValueError):
        airy(AIRY_RANGE + 1)


# ---------------------------------------------------------------- Painleve


@pytest.fixture(scope="module")
def hm():
    return hastings_mcleod()


def test_hm_boundary_and_shape(hm):
    assert hm.q[-1] == ai(hm.s_max)
    assert np.all(hm.q > 0)
    neg = hm.s <= 0
    assert np.all(np.diff(hm.q[neg]) < 0)


def test_hm_ode_and_first_integral(hm):
    assert hm.ode_residual() <= 1e-7
    assert hm.hamiltonian_gap() <= 1e-9


def test_hm_value_at_zero(hm):
    q0 = hm.q[np.argmin(np.abs(hm.s))]
    assert abs(q0 - 0.3673) <= 1e-3


def test_hm_ivp_route_agrees_on_right(hm):
    ivp = hastings_mcleod(s_min=-4, method="ivp")
    sel = hm.s >= -4
    assert np.max(np.abs(ivp.q - hm.q[sel])) < 1e-6


# ---------------------------------------------------------------- Fredholm


def test_fredholm_right_end():
    assert abs(fredholm_f2(6.0) - 1) <= 1e-8


def test_fredholm_refinement():
    for s in np.linspace(-8, 4, 13):
        assert abs(fredholm_f2(s, 40) - fredholm_f2(s, 80)) <= 1e-8


def test_fredholm_checked_and_node_floor():
    assert fredholm_f2_checked(-2.0) == pytest.approx(fredholm_f2(-2.0, 120), abs=1e-10)
    with pytest.raises(ValueError):
        fredholm_f2(0.0, nodes=20)


def test_dual_route_agreement(table):
    sel = (table.s_grid >= -8) & (table.s_grid <= 4)
    assert np.max(np.abs(table.F2[sel] - table.F2_fredholm[sel])) <= 1e-6
    i = np.argmin(np.abs(table.s_grid + 2))
    assert abs(table.F2[i] - fredholm_f2(-2.0)) <= 1e-6


# ---------------------------------------------------------------- CDFs


def test_cdf_tails(table):
    for beta in (1, 2):
        assert tw_cdf(beta, -10, table) <= 1e-6
        assert tw_cdf(beta, 8, table) >= 1 - 1e-6
    assert tw_cdf(2, 6, table) >= 1 - 1e-6
    # the beta = 1 right tail at 6 is ~2e-6, matching exp(-2/3 s^1.5) / (4 sqrt(pi) s^0.75)
    tail = 1 - tw_cdf(1, 6, table)
    approx = math.exp(-2 / 3 * 6**1.5) / (4 * math.sqrt(math.pi) * 6**0.75)
    assert 0.5 < tail / approx < 1.5


def test_cdf_strictly_increasing(table):
    s = np.linspace(-8, 4, 1201)
    for beta in (1, 2):
        assert np.all(np.diff(tw_cdf(beta, s, table)) > 0)
        assert np.all(tw_pdf(beta, s, table) > 0)


def test_means_from_both_routes(table):
    assert abs(tw_mean(1, table) - (-1.206)) <= 0.005
    assert abs(tw_mean(2, table) - (-1.771)) <= 0.005
    assert abs(tw_mean(2, table, route="fredholm") - (-1.771)) <= 0.005


def test_quantile_inverts_cdf(table):
    for beta in (1, 2):
        for p in (0.01, 0.5, 0.99):
            assert tw_cdf(beta, tw_quantile(beta, p, table), table) == pytest.approx(p, abs=1e-9)


def test_clipping_warns(table):
    with pytest.warns(RuntimeWarning):
        v = tw_cdf(1, 20.0, table)
    assert v == pytest.approx(1.0, abs=1e-8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tw_cdf(1, 0.0, table)
