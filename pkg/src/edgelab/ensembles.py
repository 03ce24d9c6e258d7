"""Entry distributions and Wigner matrix samplers.

Every off-diagonal law here is standardized (mean 0, variance 1).  The
distributions are immutable; sampling always goes through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .rng import substream

__all__ = [
    "EntryDistribution",
    "Gaussian",
    "Rademacher",
    "ParetoSym",
    "MarginalLog",
    "Discrete",
    "FourMomentInfeasible",
    "EnsembleSpec",
    "SupportBound",
    "four_moment_bounded",
    "unscaled_sum_construction",
    "four_moment_support_constant",
    "sample_entry",
    "tail_functional",
    "tail_functional_estimate",
    "sample_wigner",
    "goe",
    "wigner",
    "goe_tridiagonal",
    "check_bounded_support",
    "parse_distribution",
]


class EntryDistribution:
    """Scalar law of a matrix entry.

    Subclasses provide ``sample``, ``tail_prob`` (``P(|x| >= s)``) and exact
    ``moment``.  ``criterion_holds`` records whether ``s**4 P(|x| >= s) -> 0``.
    """

    kind: str = "abstract"
    criterion_holds: bool = True
    symmetric: bool = True

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def tail_prob(self, s):
        raise NotImplementedError

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def abs_moment(self, k: int) -> float:
        return self.moment(k) if k % 2 == 0 else float("nan")

    def sample_abs_conditional(self, rng, size, T: float, large: bool):
        """Draw ``x`` conditioned on ``|x| > T`` (``large``) or ``|x| <= T``.

        Default is rejection sampling; continuous laws override with exact
        inverse-CDF draws.
        """
        out = np.empty(size)
        filled = 0
        while filled < size:
            batch = self.sample(rng, max(64, 2 * (size - filled)))
            keep = batch[(np.abs(batch) > T) if large else (np.abs(batch) <= T)]
            take = min(len(keep), size - filled)
            out[filled : filled + take] = keep[:take]
            filled += take
        return out

    def descriptor(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return self.descriptor()


def _scalar(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


@dataclass(frozen=True, repr=False)
class Gaussian(EntryDistribution):
    var: float = 1.0
    kind = "gaussian"

    def sample(self, rng, size=None):
        return rng.standard_normal(size) * math.sqrt(self.var)

    def tail_prob(self, s):
        s = np.asarray(s, dtype=float)
        return _scalar(special.erfc(s / math.sqrt(2.0 * self.var)))

    def moment(self, k):
        if k % 2:
            return 0.0
        return self.var ** (k // 2) * float(math.prod(range(k - 1, 0, -2)))

    def sample_abs_conditional(self, rng, size, T, large):
        sd = math.sqrt(self.var)
        pT = float(special.erfc(T / (sd * math.sqrt(2.0))))
        u = rng.random(size)
        surv = pT * (1.0 - u) if large else pT + (1.0 - pT) * (1.0 - u)
        mag = sd * math.sqrt(2.0) * special.erfcinv(surv)
        return mag * rng.choice([-1.0, 1.0], size)

    def descriptor(self):
        return f"gaussian(var={self.var!r})"


@dataclass(frozen=True, repr=False)
class Rademacher(EntryDistribution):
    kind = "rademacher"

    def sample(self, rng, size=None):
        return rng.choice(np.array([-1.0, 1.0]), size)

    def tail_prob(self, s):
        s = np.asarray(s, dtype=float)
        return _scalar(np.where(s <= 1.0, 1.0, 0.0))

    def moment(self, k):
        return 1.0 if k % 2 == 0 else 0.0

    def descriptor(self):
        return "rademacher"


@dataclass(frozen=True, repr=False)
class ParetoSym(EntryDistribution):
    """Symmetric Pareto law ``|x| = s0 * U**(-1/alpha)`` with unit variance."""

    alpha: float = 4.5
    kind = "pareto_sym"

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError("pareto_sym needs alpha > 2 for a finite variance")

    @property
    def s0(self) -> float:
        return math.sqrt((self.alpha - 2.0) / self.alpha)

    @property
    def criterion_holds(self) -> bool:
        return self.alpha > 4

    def _mag(self, surv):
        return self.s0 * np.power(surv, -1.0 / self.alpha)

    def sample(self, rng, size=None):
        u = 1.0 - rng.random(size)
        sign = rng.choice(np.array([-1.0, 1.0]), size)
        return sign * self._mag(u)

    def sample_abs_conditional(self, rng, size, T, large):
        pT = float(self.tail_prob(T))
        u = 1.0 - rng.random(size)
        surv = pT * u if large else pT + (1.0 - pT) * u
        return rng.choice(np.array([-1.0, 1.0]), size) * self._mag(surv)

    def tail_prob(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(s <= self.s0, 1.0, np.power(self.s0 / np.maximum(s, 1e-300), self.alpha))
        return _scalar(out)

    def moment(self, k):
        if k % 2:
            return 0.0 if k < self.alpha else float("nan")
        return self.abs_moment(k)

    def abs_moment(self, k):
        if k >= self.alpha:
            return float("inf")
        return self.alpha * self.s0**k / (self.alpha - k)

    def descriptor(self):
        return f"pareto_sym(alpha={self.alpha!r})"


def _marginal_surv_unit(y):
    # survival of the unscaled magnitude Y >= e
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y <= math.e, 1.0, (math.e / y) ** 4 / np.log(np.maximum(y, math.e)))
    return out


def _marginal_quantile_unit(surv):
    """Solve ``(e/y)^4 / log y = surv`` for ``y >= e``.

    In ``w = log y`` the equation is ``4 (w - 1) + log w = -log surv``, concave
    and increasing on ``[1, 1 - log(surv)/4]``; Newton with a bisection
    fallback whenever a step leaves the bracket.
    """
    surv = np.asarray(surv, dtype=float)
    rhs = -np.log(surv)
    lo = np.ones_like(rhs)
    hi = 1.0 + rhs / 4.0 + 1e-12
    w = lo.copy()
    for _ in range(100):
        f = 4.0 * (w - 1.0) + np.log(w) - rhs
        lo = np.where(f <= 0, w, lo)
        hi = np.where(f > 0, w, hi)
        step = f / (4.0 + 1.0 / w)
        w_new = w - step
        bad = (w_new < lo) | (w_new > hi)
        w_new = np.where(bad, 0.5 * (lo + hi), w_new)
        if np.all(np.abs(w_new - w) <= 1e-15 * w_new):
            w = w_new
            break
        w = w_new
    return np.exp(w)


_MARGINAL_EY2 = None


def _marginal_second_moment_unit() -> float:
    global _MARGINAL_EY2
    if _MARGINAL_EY2 is None:
        # E Y^2 = e^2 + int_e^inf 2 y P(Y > y) dy ; substitute y = e^w
        tail, _ = integrate.quad(
            lambda w: 2.0 * math.exp(4.0 - 2.0 * w) / w,
            1.0,
            np.inf,
            epsabs=1e-14,
            epsrel=1e-13,
            limit=200,
        )
        _MARGINAL_EY2 = math.e**2 + tail
    return _MARGINAL_EY2


@dataclass(frozen=True, repr=False)
class MarginalLog(EntryDistribution):
    """Symmetric law with ``P(|x| > s) ~ s**-4 / log s``.

    The fourth moment is infinite, yet ``s**4 P(|x| >= s) -> 0``.
    """

    kind = "marginal_log"

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(_marginal_second_moment_unit())

    def sample(self, rng, size=None):
        u = 1.0 - rng.random(size)
        sign = rng.choice(np.array([-1.0, 1.0]), size)
        return _scalar(sign * self.scale * _marginal_quantile_unit(u))

    def sample_abs_conditional(self, rng, size, T, large):
        pT = float(self.tail_prob(T))
        u = 1.0 - rng.random(size)
        surv = pT * u if large else pT + (1.0 - pT) * u
        return rng.choice(np.array([-1.0, 1.0]), size) * self.scale * _marginal_quantile_unit(surv)

    def tail_prob(self, s):
        s = np.asarray(s, dtype=float)
        return _scalar(_marginal_surv_unit(s / self.scale))

    def moment(self, k):
        if k % 2:
            return 0.0 if k < 4 else float("nan")
        return self.abs_moment(k)

    def abs_moment(self, k):
        if k >= 4:
            return float("inf")
        if k == 0:
            return 1.0
        tail, _ = integrate.quad(
            lambda w: k * math.exp(4.0 + (k - 4.0) * w) / w,
            1.0,
            np.inf,
            epsabs=1e-14,
            epsrel=1e-13,
            limit=200,
        )
        return self.scale**k * (math.e**k + tail)

    def descriptor(self):
        return "marginal_log"


@dataclass(frozen=True, repr=False)
class Discrete(EntryDistribution):
    """Finitely supported law on ``atoms`` with probabilities ``weights``."""

    atoms: tuple = ()
    weights: tuple = ()
    label: str = field(default="", compare=False)
    kind = "discrete"

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.shape != w.shape or a.ndim != 1 or a.size == 0:
            raise ValueError("atoms and weights must be equal-length 1-d sequences")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", tuple(float(v) for v in a))
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @property
    def symmetric(self) -> bool:
        return False

    def sample(self, rng, size=None):
        a = np.asarray(self.atoms)
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(size), side="right")
        return a[np.minimum(idx, len(a) - 1)]

    def tail_prob(self, s):
        a = np.abs(np.asarray(self.atoms))
        w = np.asarray(self.weights)
        s = np.asarray(s, dtype=float)
        out = (w[None, :] * (a[None, :] >= s.reshape(-1, 1))).sum(axis=1).reshape(s.shape)
        return _scalar(out)

    def moment(self, k):
        a = np.asarray(self.atoms)
        return math.fsum(np.asarray(self.weights) * a**k)

    def abs_moment(self, k):
        a = np.abs(np.asarray(self.atoms))
        return math.fsum(np.asarray(self.weights) * a**k)

    @property
    def support_radius(self) -> float:
        return float(np.max(np.abs(self.atoms)))

    def descriptor(self):
        if self.label:
            return self.label
        atoms = ";".join(repr(v) for v in self.atoms)
        weights = ";".join(repr(v) for v in self.weights)
        return f"discrete(atoms={atoms},weights={weights})"


# --------------------------------------------------------------------------
# four-moment matching


class FourMomentInfeasible(ValueError):
    pass


def _merge_atoms(atoms, weights, tol=1e-14):
    order = np.argsort(atoms)
    a = np.asarray(atoms, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    out_a, out_w = [a[0]], [w[0]]
    for x, p in zip(a[1:], w[1:]):
        if abs(x - out_a[-1]) <= tol * max(1.0, abs(x)):
            out_w[-1] += p
        else:
            out_a.append(x)
            out_w.append(p)
    keep = [i for i, p in enumerate(out_w) if p > 0]
    return [out_a[i] for i in keep], [out_w[i] for i in keep]


def _two_point(c: float):
    """Standardized two-atom law with third moment ``c``."""
    r = math.sqrt(c * c + 4.0)
    a = (c - r) / 2.0
    b = (c + r) / 2.0
    return [a, b], [b / r, -a / r]


def _y_t(t: float):
    p = 1.0 / (2.0 * t * (t * t + t - 1.0))
    inner = math.sqrt(t / (1.0 + t))
    return [-t, -inner, inner, t], [p, 0.5 - p, 0.5 - p, p]


def _x_skew(A: float):
    r = math.sqrt(1.0 + 2.0 * A * A)
    a = math.sqrt(2.0) * A - r
    b = math.sqrt(2.0) * A + r
    return [a, b], [b / (2.0 * r), -a / (2.0 * r)]


def _convolve(a1, w1, a2, w2):
    atoms = [x + y for x in a1 for y in a2]
    weights = [p * q for p in w1 for q in w2]
    return atoms, weights


def four_moment_bounded(A: float, B: float) -> Discrete:
    """Finitely supported law with moments ``(0, 1, A, B)``.

    For ``B >= 2A^2 + 2`` the law is ``(X + Y_t) / sqrt(2)`` where ``X`` is the
    two-point law with third moment ``2 sqrt(2) A`` and ``Y_t`` the symmetric
    four-atom law with fourth moment ``t = 4B - 8A^2 - 7``.  Below that, an
    even mixture of two-point laws with third moments ``A +/- d``,
    ``d = sqrt(B - A^2 - 1)``, is used.

    Raises:
        FourMomentInfeasible: if ``B < A^2 + 1``.
    """
    A = float(A)
    B = float(B)
    if B < A * A + 1.0 - 1e-15:
        raise FourMomentInfeasible(
            f"no law with mean 0, variance 1, third moment {A} and fourth moment {B}: "
            f"need B >= A^2 + 1 = {A * A + 1.0}"
        )
    label = f"bounded_four_moment(A={A!r},B={B!r})"
    if B >= 2.0 * A * A + 2.0:
        t = 4.0 * B - 8.0 * A * A - 7.0
        ax, wx = _x_skew(A)
        ay, wy = _y_t(t)
        atoms, weights = _convolve(ax, wx, ay, wy)
        atoms = [v / math.sqrt(2.0) for v in atoms]
    else:
        d = math.sqrt(max(B - A * A - 1.0, 0.0))
        a1, w1 = _two_point(A + d)
        a2, w2 = _two_point(A - d)
        atoms = a1 + a2
        weights = [0.5 * p for p in w1 + w2]
    atoms, weights = _merge_atoms(atoms, weights)
    total = math.fsum(weights)
    weights = [p / total for p in weights]
    return Discrete(tuple(atoms), tuple(weights), label=label)


def four_moment_support_constant(A: float) -> float:
    """``D`` with ``supp four_moment_bounded(A, B) in [-D B, D B]`` for all feasible B."""
    A = abs(float(A))
    skew_route = (math.sqrt(2.0) * A + math.sqrt(1.0 + 2.0 * A * A) + 4.0) / math.sqrt(2.0)
    mixture_route = A + 2.0
    return max(skew_route, mixture_route)


def unscaled_sum_construction(A: float, B: float) -> Discrete:
    """``X + Y_t`` with ``t = 4B - 8A^2 - 2`` and no rescaling.

    Kept for comparison against :func:`four_moment_bounded`; its variance is 2.
    """
    t = 4.0 * B - 8.0 * A * A - 2.0
    if t < 1.0:
        raise FourMomentInfeasible("Y_t needs t >= 1")
    ax, wx = _x_skew(A)
    ay, wy = _y_t(t)
    atoms, weights = _merge_atoms(*_convolve(ax, wx, ay, wy))
    return Discrete(tuple(atoms), tuple(weights))


# --------------------------------------------------------------------------
# scalar operations


def sample_entry(dist: EntryDistribution, rng: np.random.Generator) -> float:
    return float(dist.sample(rng))


def tail_functional(dist: EntryDistribution, s):
    """``s**4 * P(|x| >= s)`` from the closed-form tail."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    return _scalar(s**4 * np.asarray(dist.tail_prob(s)))


def tail_functional_estimate(dist: EntryDistribution, s: float, rng, n: int = 10_000_000, chunk: int = 1_000_000):
    """Monte Carlo ``s**4 P(|x| >= s)`` and its standard error."""
    hits = 0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        hits += int(np.count_nonzero(np.abs(dist.sample(rng, m)) >= s))
        done += m
    p = hits / n
    return s**4 * p, s**4 * math.sqrt(p * (1.0 - p) / n)


# --------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class EnsembleSpec:
    """Real symmetric Wigner ensemble ``h_ij = x_ij / sqrt(N)``."""

    N: int
    offdiag: EntryDistribution
    diag: EntryDistribution
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")

    def with_size(self, N: int) -> "EnsembleSpec":
        return EnsembleSpec(N, self.offdiag, self.diag, self.seed, self.label)


def goe(N: int, seed: int = 0) -> EnsembleSpec:
    return EnsembleSpec(N, Gaussian(1.0), Gaussian(2.0), seed, "goe")


def wigner(N: int, dist: EntryDistribution, seed: int = 0, label: str = "") -> EnsembleSpec:
    """Wigner ensemble with the same law on and off the diagonal."""
    return EnsembleSpec(N, dist, dist, seed, label or dist.descriptor())


def sample_wigner(spec: EnsembleSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw one matrix; the upper triangle is filled row by row, then the diagonal."""
    if rng is None:
        rng = substream(spec.seed)
    N = spec.N
    scale = 1.0 / math.sqrt(N)
    iu = np.triu_indices(N, 1)
    H = np.empty((N, N))
    vals = np.asarray(spec.offdiag.sample(rng, len(iu[0])), dtype=float) * scale
    H[iu] = vals
    H[iu[1], iu[0]] = vals
    H[np.diag_indices(N)] = np.asarray(spec.diag.sample(rng, N), dtype=float) * scale
    return H


def goe_tridiagonal(N: int, rng: np.random.Generator):
    """Tridiagonal model with exactly the GOE eigenvalue law.

    Returns ``(diagonal, offdiagonal)`` normalized like :func:`goe`
    (off-diagonal variance ``1/N``).
    """
    scale = 1.0 / math.sqrt(N)
    d = rng.standard_normal(N) * math.sqrt(2.0) * scale
    e = np.sqrt(rng.chisquare(np.arange(N - 1, 0, -1, dtype=float))) * scale
    return d, e


@dataclass(frozen=True)
class SupportBound:
    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("q must be positive")


def check_bounded_support(H: np.ndarray, bound: SupportBound):
    """Whether every ``|h_ij| <= 1/q``.

    Returns:
        ``(ok, max_abs, (i, j))`` with the location of the largest entry.
    """
    H = np.asarray(H)
    absH = np.abs(H)
    flat = int(np.argmax(absH))
    loc = tuple(int(v) for v in np.unravel_index(flat, H.shape))
    mx = float(absH.flat[flat])
    return mx <= 1.0 / bound.q, mx, loc


# --------------------------------------------------------------------------
# descriptors

_DESC = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def _kwargs(body: str) -> dict:
    out = {}
    if not body:
        return out
    for part in re.split(r",(?=\s*[A-Za-z_]+\s*=)", body):
        key, _, val = part.partition("=")
        out[key.strip()] = val.strip()
    return out


def parse_distribution(text: str) -> EntryDistribution:
    """Inverse of ``EntryDistribution.descriptor``."""
    m = _DESC.match(text)
    if not m:
        raise ValueError(f"cannot parse distribution descriptor {text!r}")
    kind, body = m.group(1), m.group(2) or ""
    kw = _kwargs(body)
    try:
        if kind == "gaussian":
            return Gaussian(float(kw.get("var", 1.0)))
        if kind == "rademacher":
            return Rademacher()
        if kind == "pareto_sym":
            return ParetoSym(float(kw["alpha"]))
        if kind == "marginal_log":
            return MarginalLog()
        if kind == "bounded_four_moment":
            return four_moment_bounded(float(kw["A"]), float(kw["B"]))
        if kind == "discrete":
            atoms = tuple(float(v) for v in kw["atoms"].split(";"))
            weights = tuple(float(v) for v in kw["weights"].split(";"))
            return Discrete(atoms, weights)
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc} in {text!r}") from None
    raise ValueError(f"unknown distribution kind {kind!r}")
