"""Empirical CDFs, Kolmogorov-Smirnov distances, moment estimates, binomial intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats as sps

__all__ = [
    "Ecdf",
    "PolylogScale",
    "KSResult",
    "ks_one_sample",
    "ks_two_sample",
    "kolmogorov_pvalue",
    "MomentEstimates",
    "moment_estimates",
    "running_moment_slope",
    "binomial_ci",
]


class Ecdf:
    """Right-continuous empirical distribution function."""

    def __init__(self, sample):
        x = np.sort(np.asarray(sample, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empty sample")
        self.values = x
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, t):
        out = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right") / self.n
        return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PolylogScale:
    """Envelope ``phi(N)^C`` with ``phi(N) = (log N)^(log log N)``."""

    N: int
    C: float = 2.0

    @property
    def phi(self) -> float:
        L = math.log(self.N)
        return L ** math.log(L)

    @property
    def envelope(self) -> float:
        return self.phi**self.C


@dataclass(frozen=True)
class KSResult:
    d: float
    n: int
    pvalue: float

    def __float__(self):
        return self.d


def kolmogorov_pvalue(d: float, n_eff: float) -> float:
    """Asymptotic p-value ``P(K > sqrt(n_eff) d)`` of the Kolmogorov law."""
    return float(special.kolmogorov(math.sqrt(n_eff) * d))


def ks_one_sample(sample, cdf) -> KSResult:
    """``sup_t |Ecdf(t) - cdf(t)|``, evaluated on both sides of every jump."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    d = float(max(d_plus, d_minus, 0.0))
    return KSResult(d, n, kolmogorov_pvalue(d, n))


def ks_two_sample(a, b) -> KSResult:
    """``sup_t |Ecdf_a(t) - Ecdf_b(t)|``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    return KSResult(d, int(round(n_eff)), kolmogorov_pvalue(d, n_eff))


@dataclass(frozen=True)
class MomentEstimates:
    """Raw moments ``E x^k`` and central moments, with jackknife standard errors."""

    raw: np.ndarray
    raw_se: np.ndarray
    central: np.ndarray
    central_se: np.ndarray
    n: int

    @property
    def mean(self) -> float:
        return float(self.raw[1])

    @property
    def variance(self) -> float:
        return float(self.central[2])


def _central_from_sums(sums, n):
    # sums[p] = sum x^p, p = 0..K ; returns central moments (population form)
    K = sums.shape[0] - 1
    mu = sums[1] / n
    out = [np.ones_like(mu), np.zeros_like(mu)]
    for k in range(2, K + 1):
        acc = np.zeros_like(mu)
        for p in range(k + 1):
            acc = acc + math.comb(k, p) * sums[p] / n * (-mu) ** (k - p)
        out.append(acc)
    return np.array(out)


def moment_estimates(sample, kmax: int = 4) -> MomentEstimates:
    """Moments up to ``kmax`` with leave-one-out jackknife standard errors."""
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations")
    powers = np.array([x**p for p in range(kmax + 1)])
    sums = np.array([math.fsum(row) for row in powers])
    raw = sums / n
    central = _central_from_sums(sums, n)
    # leave-one-out: sums minus the row of x_i^p
    loo = sums[:, None] - powers
    raw_loo = loo / (n - 1)
    central_loo = _central_from_sums(loo, n - 1)

    def jk_se(theta_loo):
        m = theta_loo.mean(axis=-1, keepdims=True)
        return np.sqrt((n - 1) / n * np.sum((theta_loo - m) ** 2, axis=-1))

    return MomentEstimates(raw, jk_se(raw_loo), central, jk_se(central_loo), n)


def running_moment_slope(sample, k: int = 4, points: int = 8) -> float:
    """Log-log slope of the running ``k``-th absolute moment against sample size.

    A slope clearly above 0 flags a divergent moment.
    """
    x = np.abs(np.asarray(sample, dtype=float).ravel()) ** k
    n = x.size
    sizes = np.unique(np.geomspace(max(100, n // 1000), n, points).astype(int))
    csum = np.cumsum(x)
    est = csum[sizes - 1] / sizes
    slope, _ = np.polyfit(np.log(sizes), np.log(est), 1)
    return float(slope)


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval."""
    if trials <= 0 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials > 0")
    z = float(sps.norm.ppf(0.5 + level / 2.0))
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    # the bounds at k = 0 and k = n are exactly 0 and 1; rounding would miss them
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi
