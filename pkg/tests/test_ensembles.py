import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from edgelab.ensembles import (
    Discrete,
    EnsembleSpec,
    FourMomentInfeasible,
    Gaussian,
    MarginalLog,
    ParetoSym,
    Rademacher,
    SupportBound,
    check_bounded_support,
    four_moment_bounded,
    four_moment_support_constant,
    goe,
    goe_tridiagonal,
    parse_distribution,
    sample_entry,
    sample_wigner,
    tail_functional,
    tail_functional_estimate,
    unscaled_sum_construction,
    wigner,
)
from edgelab.rng import substream
from edgelab.spectra import largest_eigenvalue, largest_eigenvalue_tridiagonal
from edgelab.stats import ks_two_sample, moment_estimates

ALL_KINDS = [
    Gaussian(1.0),
    Rademacher(),
    ParetoSym(4.0),
    ParetoSym(4.5),
    MarginalLog(),
    four_moment_bounded(0.5, 5.0),
    four_moment_bounded(1.0, 2.5),
]


def hp_moments(dist, kmax=4):
    with mpmath.workdps(50):
        a = [mpmath.mpf(v) for v in dist.atoms]
        w = [mpmath.mpf(v) for v in dist.weights]
        return [float(mpmath.fsum(p * x**k for p, x in zip(w, a))) for k in range(kmax + 1)]


# ---------------------------------------------------------------- scalar laws


def test_rademacher_frequencies():
    x = Rademacher().sample(substream(1), 100_000)
    assert set(np.unique(x)) == {-1.0, 1.0}
    sigma = math.sqrt(0.25 / x.size)
    assert abs(np.mean(x == 1) - 0.5) <= 3 * sigma
    assert sample_entry(Rademacher(), substream(2)) in (-1.0, 1.0)


def test_pareto_floor():
    d = ParetoSym(4.0)
    assert d.s0 == pytest.approx(1 / math.sqrt(2))
    x = d.sample(substream(3), 200_000)
    assert np.all(np.abs(x) >= d.s0)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.descriptor())
def test_standardization_by_sampling(dist):
    x = dist.sample(substream(11), 1_000_000)
    est = moment_estimates(x, kmax=2)
    assert abs(est.mean) <= 5 * est.raw_se[1]
    assert abs(est.variance - 1) <= 5 * est.central_se[2]


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.descriptor())
def test_standardization_exact(dist):
    assert abs(dist.moment(1)) <= 1e-12
    assert dist.moment(2) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_variance_sampled():
    x = Gaussian(1.0).sample(substream(5), 1_000_000)
    est = moment_estimates(x, kmax=4)
    assert abs(est.variance - 1) <= 5 * est.central_se[2]
    assert abs(est.central[4] - 3) <= 5 * est.central_se[4]


def test_marginal_second_moment_by_quadrature():
    d = MarginalLog()
    # E x^2 = int 2 s P(|x| >= s) ds
    val, _ = integrate.quad(lambda s: 2 * s * d.tail_prob(s), 0, np.inf, limit=400)
    assert val == pytest.approx(1.0, abs=1e-7)


def test_marginal_tail_against_sampling():
    d = MarginalLog()
    for s in (3.0, 10.0):
        est, se = tail_functional_estimate(d, s, substream(8), n=2_000_000)
        assert abs(est - tail_functional(d, s)) <= 5 * se


# ---------------------------------------------------------------- tail functional


def test_tail_functional_pareto_four_is_constant():
    d = ParetoSym(4.0)
    s = np.array([1.0, 3.0, 10.0, 1e3, 1e4])
    assert np.allclose(tail_functional(d, s), 0.25, rtol=1e-13)
    assert not d.criterion_holds


def test_tail_functional_gaussian_far_tail():
    assert tail_functional(Gaussian(1.0), 20.0) < 1e-10


@pytest.mark.parametrize(
    "dist",
    [Gaussian(1.0), Rademacher(), ParetoSym(4.5), MarginalLog(), four_moment_bounded(0.5, 5.0)],
    ids=lambda d: d.descriptor(),
)
def test_criterion_classifier_decays(dist):
    vals = np.array([tail_functional(dist, s) for s in (10.0, 1e2, 1e3, 1e4)])
    assert np.all(np.diff(vals) <= 0)
    assert vals[-1] < 0.05
    assert dist.criterion_holds


def test_criterion_classifier_pareto_four_bounded_below():
    vals = [tail_functional(ParetoSym(4.0), s) for s in (10.0, 1e2, 1e3, 1e4)]
    assert min(vals) >= 0.2


def test_marginal_fourth_moment_infinite_but_tail_decays():
    d = MarginalLog()
    assert math.isinf(d.abs_moment(4))
    vals = [tail_functional(d, s) for s in (1e2, 1e4, 1e8, 1e16)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_tail_functional_rejects_nonpositive():
    with pytest.raises(ValueError):
        tail_functional(Gaussian(1.0), 0.0)


# ---------------------------------------------------------------- four moments


@pytest.mark.parametrize("A,B", [(0.0, 3.0), (1.0, 10.0), (0.5, 5.0), (1.0, 2.5), (-0.7, 1.6), (2.0, 30.0)])
def test_four_moment_exact(A, B):
    d = four_moment_bounded(A, B)
    m = hp_moments(d)
    assert m[0] == pytest.approx(1.0, abs=1e-15)
    assert abs(m[1]) <= 1e-12
    assert abs(m[2] - 1) <= 1e-12
    assert abs(m[3] - A) <= 1e-12
    assert abs(m[4] - B) <= 1e-12 * max(1.0, B)
    assert d.support_radius <= four_moment_support_constant(A) * B


def test_four_moment_boundary_is_rademacher():
    d = four_moment_bounded(0.0, 1.0)
    assert sorted(d.atoms) == [-1.0, 1.0]
    assert d.weights == pytest.approx((0.5, 0.5), abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(0, 40))
def test_four_moment_property(A, excess):
    B = A * A + 1 + excess
    d = four_moment_bounded(A, B)
    m = hp_moments(d)
    assert abs(m[1]) <= 1e-12 * max(1.0, B)
    assert abs(m[2] - 1) <= 1e-12 * max(1.0, B)
    assert abs(m[3] - A) <= 1e-12 * max(1.0, B)
    assert abs(m[4] - B) <= 1e-12 * max(1.0, B)
    assert d.support_radius <= four_moment_support_constant(A) * B


def test_four_moment_infeasible():
    with pytest.raises(FourMomentInfeasible, match="B >= A\\^2 \\+ 1"):
        four_moment_bounded(1.0, 1.5)


def test_unscaled_sum_has_variance_two():
    d = unscaled_sum_construction(0.5, 5.0)
    m = hp_moments(d)
    assert m[2] == pytest.approx(2.0, abs=1e-12)


# ---------------------------------------------------------------- matrices


def test_two_by_two_rademacher():
    spec = EnsembleSpec(2, Rademacher(), Discrete((0.0,), (1.0,)), seed=4)
    H = sample_wigner(spec)
    assert H[0, 0] == 0 and H[1, 1] == 0
    assert abs(H[0, 1]) == pytest.approx(2**-0.5, abs=2e-16)
    assert np.allclose(np.linalg.eigvalsh(H), [-(2**-0.5), 2**-0.5], atol=1e-15)


def test_goe_diagonal_variance():
    N = 4
    diag = np.concatenate([np.diag(sample_wigner(goe(N), substream(9, k))) for k in range(10_000)])
    est = moment_estimates(diag, kmax=2)
    assert abs(est.raw[2] - 2 / N) <= 5 * est.raw_se[2]


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.descriptor())
def test_sample_wigner_symmetric_and_deterministic(dist):
    spec = wigner(30, dist, seed=17)
    H1 = sample_wigner(spec, substream(17, 3))
    H2 = sample_wigner(spec, substream(17, 3))
    assert np.array_equal(H1, H1.T)
    assert np.array_equal(H1, H2)
    assert not np.array_equal(H1, sample_wigner(spec, substream(17, 4)))


def test_tridiagonal_model_matches_dense_goe():
    N, M = 60, 2000
    dense = [largest_eigenvalue(sample_wigner(goe(N), substream(21, k))) for k in range(M)]
    tri = [largest_eigenvalue_tridiagonal(*goe_tridiagonal(N, substream(22, k))) for k in range(M)]
    assert ks_two_sample(dense, tri).pvalue > 0.01
    # E tr H^2 = (N + 1) for both normalizations
    tr = [np.sum(d**2) + 2 * np.sum(e**2) for d, e in (goe_tridiagonal(N, substream(23, k)) for k in range(M))]
    est = moment_estimates(tr, kmax=1)
    assert abs(est.mean - (N + 1)) <= 5 * est.raw_se[1]


def test_bounded_support_checks():
    ok, mx, _ = check_bounded_support(np.zeros((5, 5)), SupportBound(3.0))
    assert ok and mx == 0
    H = np.zeros((5, 5))
    H[1, 3] = H[3, 1] = 2 / 3.0
    ok, mx, loc = check_bounded_support(H, SupportBound(3.0))
    assert not ok and mx == pytest.approx(2 / 3) and set(loc) == {1, 3}
    with pytest.raises(ValueError):
        SupportBound(0.0)


def test_goe_support_scale():
    # the largest GOE entry sits near sqrt(2 log N^2 / N), well above N^-0.4 at N = 400,
    # and below 2 log N / sqrt N
    N = 400
    draws = [sample_wigner(goe(N), substream(31, k)) for k in range(100)]
    tight = sum(check_bounded_support(H, SupportBound(N**0.4))[0] for H in draws)
    loose = sum(check_bounded_support(H, SupportBound(math.sqrt(N) / (2 * math.log(N))))[0] for H in draws)
    assert tight == 0
    assert loose >= 99


@pytest.mark.parametrize(
    "text",
    ["gaussian(var=2.0)", "rademacher", "pareto_sym(alpha=4.5)", "marginal_log", "bounded_four_moment(A=0.5,B=5.0)"],
)
def test_descriptor_round_trip(text):
    d = parse_distribution(text)
    again = parse_distribution(d.descriptor())
    assert again.descriptor() == d.descriptor()
    for k in (2, 4):
        assert again.moment(k) == d.moment(k)


def test_discrete_descriptor_round_trip():
    d = Discrete((-1.5, 0.25, 3.0), (0.2, 0.7, 0.1))
    assert parse_distribution(d.descriptor()) == d


def test_parse_rejects_garbage():
    for bad in ["cauchy", "pareto_sym()", "gaussian(var=x)", "((("]:
        with pytest.raises(ValueError):
            parse_distribution(bad)
