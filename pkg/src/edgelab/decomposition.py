"""Cutoff decomposition of heavy-tailed Wigner matrices and the low-rank
perturbation that carries the rare large entries.

An entry ``x`` is split at ``T = N^(1/2 - eps)`` into a small part, a large
part and an indicator, ``x = xS (1 - c) + xL c + beta``.  The large entries,
after the cutoffs, form ``E = V D V^T``; eigenvalues of ``H^S + E`` are the
roots of ``det(V^T G^S(mu) V + D^-1)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .ensembles import Discrete, EnsembleSpec, EntryDistribution
from .rng import substream
from .spectra import SpectralData, eigh, largest_eigenvalue

__all__ = [
    "CutoffParams",
    "CutoffDecomposition",
    "LowRankPerturbation",
    "OverlapError",
    "CutoffSample",
    "TrackingTrial",
    "TrackingResult",
    "Witness",
    "cutoff_params",
    "split_sample",
    "build_low_rank",
    "secular_matrix",
    "secular_residual",
    "secular_tolerance",
    "secular_roots",
    "sample_cutoff_matrices",
    "tracking_trial",
    "eigenvalue_tracking",
    "necessity_witness",
    "LARGE_ENTRY_CAP",
]

log = logging.getLogger(__name__)

LARGE_ENTRY_CAP = 0.75
POLE_TOL = 1e-12


# --------------------------------------------------------------------------
# entry-level split


@dataclass(frozen=True)
class CutoffParams:
    epsilon: float
    N: int
    T: float
    alpha: float
    beta: float
    alpha_diag: float
    beta_diag: float
    alpha_se: float = 0.0
    beta_se: float = 0.0


def _split_moments(dist: EntryDistribution, T: float, rng=None, n: int = 10_000_000):
    """``P(|x| > T)`` and ``E[1(|x| > T) x]`` with standard errors."""
    if isinstance(dist, Discrete):
        a = np.asarray(dist.atoms)
        w = np.asarray(dist.weights)
        big = np.abs(a) > T
        return float(w[big].sum()), math.fsum(w[big] * a[big]), 0.0, 0.0
    if dist.symmetric:
        return float(dist.tail_prob(T)), 0.0, 0.0, 0.0
    rng = rng or substream(0, 0xC0FF)
    x = dist.sample(rng, n)
    big = np.abs(x) > T
    p = big.mean()
    y = np.where(big, x, 0.0)
    return float(p), float(y.mean()), math.sqrt(p * (1 - p) / n), float(y.std() / math.sqrt(n))


def cutoff_params(dist: EntryDistribution, N: int, epsilon: float, diag: EntryDistribution | None = None) -> CutoffParams:
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    T = N ** (0.5 - epsilon)
    a, b, a_se, b_se = _split_moments(dist, T)
    ad, bd, _, _ = _split_moments(diag if diag is not None else dist, T)
    return CutoffParams(epsilon, N, T, a, b, ad, bd, a_se, b_se)


@dataclass(frozen=True)
class CutoffDecomposition:
    """Per-entry split; ``xS`` is meaningful where ``c == 0``, ``xL`` where ``c == 1``.

    ``xS``/``xL`` hold ``x - beta`` correctly rounded and ``remainder`` the
    exact rounding error, so the shifted part is carried without loss.
    """

    xS: np.ndarray
    xL: np.ndarray
    c: np.ndarray
    params: CutoffParams
    beta: float
    remainder: np.ndarray

    def reconstruct(self):
        part = np.where(self.c == 1, self.xL, self.xS)
        s, e = _two_sum(part, self.beta)
        return s + (e + self.remainder)


def _two_sum(a, b):
    """``s + e == a + b`` exactly with ``s = fl(a + b)``."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def split_sample(x, params: CutoffParams, diagonal: bool = False) -> CutoffDecomposition:
    """Split draws ``x`` pathwise at the threshold ``T``."""
    x = np.asarray(x, dtype=float)
    beta = params.beta_diag if diagonal else params.beta
    c = (np.abs(x) > params.T).astype(np.int8)
    shifted, remainder = _two_sum(x, -beta)
    nan = np.full_like(x, np.nan)
    xS = np.where(c == 0, shifted, nan)
    xL = np.where(c == 1, shifted, nan)
    return CutoffDecomposition(xS, xL, c, params, beta, remainder)


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class LowRankPerturbation:
    """``E = V D V^T`` for entries on pairwise disjoint index sets.

    Each off-diagonal pair ``(i, j, e)`` contributes the columns
    ``(e_i + e_j)/sqrt 2`` and ``(e_i - e_j)/sqrt 2`` with ``D`` entries
    ``e, -e``; each diagonal entry ``(i, e)`` contributes ``e_i`` with ``e``.
    """

    N: int
    pairs: tuple
    singles: tuple
    D: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.D)

    def dense(self) -> np.ndarray:
        return (self.V * self.D) @ self.V.T

    def entries_dense(self) -> np.ndarray:
        E = np.zeros((self.N, self.N))
        for i, j, e in self.pairs:
            E[i, j] = E[j, i] = e
        for i, e in self.singles:
            E[i, i] = e
        return E

    def scaled(self, gamma: float) -> "LowRankPerturbation":
        return LowRankPerturbation(
            self.N,
            tuple((i, j, gamma * e) for i, j, e in self.pairs),
            tuple((i, gamma * e) for i, e in self.singles),
            gamma * self.D,
            self.V,
        )


def build_low_rank(entries, N: int | None = None) -> LowRankPerturbation:
    """Factor a sparse symmetric ``E``.

    Args:
        entries: dense symmetric matrix, or iterable of ``(i, j, value)``
            (each unordered position once).
        N: matrix size; required unless a dense matrix is given.

    Raises:
        OverlapError: if two nonzero positions share an index.
    """
    if isinstance(entries, np.ndarray) and entries.ndim == 2:
        N = entries.shape[0]
        iu = np.argwhere(np.triu(entries) != 0)
        triples = [(int(i), int(j), float(entries[i, j])) for i, j in iu]
    else:
        if N is None:
            raise ValueError("N is required for an entry list")
        triples = [(int(i), int(j), float(v)) for i, j, v in entries if v != 0]
    used: set[int] = set()
    seen: set[frozenset] = set()
    pairs, singles = [], []
    for i, j, v in triples:
        i, j = min(i, j), max(i, j)
        key = frozenset((i, j))
        if key in seen:
            raise OverlapError(f"position ({i}, {j}) given twice")
        if used & key:
            raise OverlapError(f"position ({i}, {j}) shares an index with another nonzero entry")
        seen.add(key)
        used |= key
        (singles.append((i, v)) if i == j else pairs.append((i, j, v)))
    r = 2 * len(pairs) + len(singles)
    V = np.zeros((N, r))
    D = np.zeros(r)
    h = 1.0 / math.sqrt(2.0)
    for n, (i, j, v) in enumerate(pairs):
        V[i, 2 * n] = h
        V[j, 2 * n] = h
        V[i, 2 * n + 1] = h
        V[j, 2 * n + 1] = -h
        D[2 * n] = v
        D[2 * n + 1] = -v
    for n, (i, v) in enumerate(singles):
        V[i, 2 * len(pairs) + n] = 1.0
        D[2 * len(pairs) + n] = v
    return LowRankPerturbation(N, tuple(pairs), tuple(singles), D, V)


# --------------------------------------------------------------------------
# secular equation


def _projected(sdS: SpectralData, pert: LowRankPerturbation):
    if sdS.eigenvectors is None:
        raise ValueError("secular evaluations need eigenvectors of H^S")
    return sdS.eigenvectors.T @ pert.V


def secular_matrix(sdS: SpectralData, pert: LowRankPerturbation, mu: float, W=None) -> np.ndarray:
    """``V^T G^S(mu) V + D^-1`` with ``G^S(mu) = (H^S - mu)^-1``."""
    if np.any(pert.D == 0):
        raise ValueError("all entries of D must be nonzero")
    lam = sdS.eigenvalues
    if np.min(np.abs(lam - mu)) <= POLE_TOL * max(1.0, abs(mu)):
        raise ValueError(f"mu={mu!r} coincides with an eigenvalue of H^S")
    W = _projected(sdS, pert) if W is None else W
    M = (W.T / (lam - mu)) @ W
    M[np.diag_indices_from(M)] += 1.0 / pert.D
    return 0.5 * (M + M.T)


def secular_residual(sdS: SpectralData, pert: LowRankPerturbation, mu: float, W=None) -> float:
    """Smallest singular value of the secular matrix at ``mu``."""
    return float(np.linalg.svd(secular_matrix(sdS, pert, mu, W), compute_uv=False)[-1])


def secular_tolerance(
    sdS: SpectralData, pert: LowRankPerturbation, mu: float, rel: float = 1e-8, W=None, mu_err: float = 0.0
) -> float:
    """``rel * (||V^T G^S(mu) V||_2 + ||D^-1||_2) + mu_err * ||V^T G^S(mu)^2 V||_2``.

    Scaled by the two summands rather than their sum, which is itself
    nearly singular at a root.  ``mu_err`` bounds the error in ``mu`` (for
    example from a dense eigensolve); near a pole of ``G^S`` the secular
    matrix is steep and that error dominates.
    """
    W = _projected(sdS, pert) if W is None else W
    M = secular_matrix(sdS, pert, mu, W)
    Dinv = 1.0 / pert.D
    G = M.copy()
    G[np.diag_indices_from(G)] -= Dinv
    tol = rel * (float(np.linalg.norm(G, 2)) + float(np.max(np.abs(Dinv))))
    if mu_err:
        slope = (W.T / (sdS.eigenvalues - mu) ** 2) @ W
        tol += mu_err * float(np.linalg.norm(slope, 2))
    return tol


def secular_roots(sdS: SpectralData, pert: LowRankPerturbation, gap: float = 1e-11) -> np.ndarray:
    """All real roots of ``det(V^T G^S(mu) V + D^-1) = 0``.

    Between consecutive poles each ordered eigenvalue of the (symmetric)
    secular matrix is nondecreasing in ``mu``, so every branch crosses zero
    at most once and is bracketed by the interval ends.
    """
    lam = sdS.eigenvalues
    W = _projected(sdS, pert)
    r = pert.rank
    if r == 0:
        return np.empty(0)
    bound = float(np.max(np.abs(lam))) + float(np.max(np.abs(pert.D))) * 2.0 + 1.0
    edges = np.concatenate([[-bound], lam, [bound]])

    def branch(mu, k):
        return float(np.linalg.eigvalsh(secular_matrix(sdS, pert, mu, W))[k])

    roots = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 2 * gap * max(1.0, abs(a), abs(b)):
            continue
        lo = a + gap * max(1.0, abs(a))
        hi = b - gap * max(1.0, abs(b))
        ev_lo = np.linalg.eigvalsh(secular_matrix(sdS, pert, lo, W))
        ev_hi = np.linalg.eigvalsh(secular_matrix(sdS, pert, hi, W))
        for k in range(r):
            if ev_lo[k] < 0.0 < ev_hi[k]:
                roots.append(optimize.brentq(branch, lo, hi, args=(k,), xtol=1e-15, rtol=1e-15, maxiter=500))
            elif ev_lo[k] == 0.0:
                roots.append(lo)
    return np.sort(np.array(roots))


# --------------------------------------------------------------------------
# matrix-level cutoff sampling and tracking


@dataclass(frozen=True)
class CutoffSample:
    HS: np.ndarray
    pert: LowRankPerturbation
    n_large: int
    collisions: int
    dropped_cap: int
    dropped_rank: int


def _disjoint_positions(rng, N, n_off, n_diag):
    """Uniform large-entry positions, redrawn until pairwise disjoint."""
    used: set[int] = set()
    off, diag = [], []
    collisions = 0
    for _ in range(n_off):
        while True:
            i, j = rng.choice(N, 2, replace=False)
            if i not in used and j not in used:
                break
            collisions += 1
        used |= {int(i), int(j)}
        off.append((int(min(i, j)), int(max(i, j))))
    for _ in range(n_diag):
        while True:
            i = int(rng.integers(N))
            if i not in used:
                break
            collisions += 1
        used.add(i)
        diag.append(i)
    return off, diag, collisions


def sample_cutoff_matrices(spec: EnsembleSpec, epsilon: float, rng: np.random.Generator, params: CutoffParams | None = None) -> CutoffSample:
    """Draw ``H^S`` and ``E`` so that ``H^S + E`` follows the cutoff model.

    Small parts fill every entry; the number of large positions is binomial
    with the tail probability.  Large differences ``(xL - xS)/sqrt N`` above
    3/4 are dropped, and at most ``N^(5 eps)`` positions are kept.
    """
    N = spec.N
    params = params or cutoff_params(spec.offdiag, N, epsilon, spec.diag)
    T = params.T
    scale = 1.0 / math.sqrt(N)
    M = N * (N - 1) // 2
    xs_off = spec.offdiag.sample_abs_conditional(rng, M, T, large=False) - params.beta
    xs_diag = spec.diag.sample_abs_conditional(rng, N, T, large=False) - params.beta_diag
    iu = np.triu_indices(N, 1)
    HS = np.empty((N, N))
    HS[iu] = xs_off * scale
    HS[iu[1], iu[0]] = xs_off * scale
    HS[np.diag_indices(N)] = xs_diag * scale

    k_off = int(rng.binomial(M, params.alpha)) if params.alpha > 0 else 0
    k_diag = int(rng.binomial(N, params.alpha_diag)) if params.alpha_diag > 0 else 0
    cap = int(math.floor(N ** (5.0 * epsilon)))
    dropped_rank = max(0, k_off + k_diag - cap)
    keep_off = min(k_off, cap)
    keep_diag = min(k_diag, cap - keep_off)
    off, diag, collisions = _disjoint_positions(rng, N, keep_off, keep_diag)
    entries = []
    dropped_cap = 0
    if off:
        xl = spec.offdiag.sample_abs_conditional(rng, len(off), T, large=True) - params.beta
        for (i, j), v in zip(off, xl):
            e = (v * scale) - HS[i, j]
            if abs(e) <= LARGE_ENTRY_CAP:
                entries.append((i, j, e))
            else:
                dropped_cap += 1
    if diag:
        xl = spec.diag.sample_abs_conditional(rng, len(diag), T, large=True) - params.beta_diag
        for i, v in zip(diag, xl):
            e = (v * scale) - HS[i, i]
            if abs(e) <= LARGE_ENTRY_CAP:
                entries.append((i, i, e))
            else:
                dropped_cap += 1
    if collisions:
        log.debug("cutoff sampler: %d position collisions redrawn", collisions)
    pert = build_low_rank(entries, N)
    return CutoffSample(HS, pert, k_off + k_diag, collisions, dropped_cap, dropped_rank)


@dataclass(frozen=True)
class TrackingTrial:
    N: int
    lambda_N: float
    mu_N: float
    gap: float
    gap_ok: bool
    rank_E: int
    edge_gap_ok: bool
    collisions: int
    n_large: int


def tracking_trial(spec: EnsembleSpec, epsilon: float, rng: np.random.Generator) -> TrackingTrial:
    """One draw of ``|lambda_N(H^S) - lambda_N(H^S + E)|``."""
    cs = sample_cutoff_matrices(spec, epsilon, rng)
    N = spec.N
    sd = eigh(cs.HS, want_vectors=False)
    lam = float(sd.eigenvalues[-1])
    if cs.pert.rank == 0:
        mu = lam
    else:
        mu = largest_eigenvalue(cs.HS + cs.pert.dense())
    gap = abs(lam - mu)
    thr = N ** (-0.75)
    edge_ok = bool(sd.eigenvalues[-1] - sd.eigenvalues[-2] >= 2.0 * thr) if N > 1 else True
    return TrackingTrial(N, lam, mu, gap, gap <= thr, cs.pert.rank, edge_ok, cs.collisions, cs.n_large)


@dataclass
class TrackingResult:
    trials: list = field(default_factory=list)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([t.gap for t in self.trials])

    @property
    def frequency(self) -> float:
        return float(np.mean([t.gap_ok for t in self.trials]))

    @property
    def frequency_edge_separated(self) -> float:
        """Frequency restricted to trials with ``lambda_N - lambda_{N-1} >= 2 N^{-3/4}``."""
        sel = [t.gap_ok for t in self.trials if t.edge_gap_ok]
        return float(np.mean(sel)) if sel else float("nan")

    @property
    def edge_gap_violations(self) -> int:
        return sum(not t.edge_gap_ok for t in self.trials)


def eigenvalue_tracking(spec: EnsembleSpec, epsilon: float, trials: int, seed: int | None = None) -> TrackingResult:
    seed = spec.seed if seed is None else seed
    out = TrackingResult()
    for k in range(trials):
        out.trials.append(tracking_trial(spec, epsilon, substream(seed, k)))
    return out


# --------------------------------------------------------------------------
# necessity witness


@dataclass(frozen=True)
class Witness:
    i: int
    j: int
    bound: float


def necessity_witness(H) -> Witness | None:
    """Pair with ``|h_ij| >= 4``, ``|h_ii| < 1``, ``|h_jj| < 1`` and its Rayleigh bound.

    The bound is ``<u, H u>`` for ``u = (e_i + sgn(h_ij) e_j)/sqrt 2``, equal to
    ``|h_ij| + (h_ii + h_jj)/2 >= 3``.  Among several pairs the largest bound
    is returned.
    """
    H = np.asarray(H, dtype=float)
    d = np.diag(H)
    small = np.abs(d) < 1.0
    mask = np.triu(np.abs(H) >= 4.0, 1) & small[:, None] & small[None, :]
    idx = np.argwhere(mask)
    if idx.size == 0:
        return None
    best = None
    for i, j in idx:
        u = np.zeros(H.shape[0])
        u[i] = 1.0 / math.sqrt(2.0)
        u[j] = math.copysign(1.0, H[i, j]) / math.sqrt(2.0)
        b = float(u @ H @ u)
        if best is None or b > best.bound:
            best = Witness(int(i), int(j), b)
    return best
