"""Dense symmetric eigendecomposition and spectral observables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .semicircle import SpectralPoint, classical_locations, n_sc

__all__ = [
    "EigensolverError",
    "SpectralData",
    "GreenEvaluation",
    "eigh",
    "largest_eigenvalue",
    "largest_eigenvalue_tridiagonal",
    "green_entry",
    "green_evaluation",
    "stieltjes",
    "counting",
    "counting_sup_deviation",
    "delocalization_stat",
    "operator_norm",
    "rigidity_max",
    "resolvent_expansion_residual",
]

SYMMETRY_TOL = 1e-12


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def N(self) -> int:
        return len(self.eigenvalues)

    def _need_vectors(self):
        if self.eigenvectors is None:
            raise ValueError("this observable needs eigenvectors; call eigh(H, want_vectors=True)")
        return self.eigenvectors


@dataclass(frozen=True)
class GreenEvaluation:
    z: SpectralPoint
    entries: dict
    trace_avg: complex


def _check_symmetric(H):
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    asym = np.max(np.abs(H - H.T)) if H.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |H - H^T| = {asym:.3e})")
    return H


def eigh(H, want_vectors: bool = True) -> SpectralData:
    """Full spectrum of a real symmetric matrix, ascending."""
    H = _check_symmetric(H)
    try:
        if want_vectors:
            w, U = sla.eigh(H, check_finite=True)
            return SpectralData(w, U)
        w = sla.eigh(H, eigvals_only=True, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise EigensolverError(str(exc)) from exc
    return SpectralData(w)


def largest_eigenvalue(H) -> float:
    H = _check_symmetric(H)
    n = H.shape[0]
    try:
        w = sla.eigh(H, eigvals_only=True, subset_by_index=[n - 1, n - 1], driver="evr")
    except (sla.LinAlgError, ValueError) as exc:
        raise EigensolverError(str(exc)) from exc
    return float(w[0])


def largest_eigenvalue_tridiagonal(d, e) -> float:
    n = len(d)
    try:
        w = sla.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(n - 1, n - 1))
    except (sla.LinAlgError, ValueError) as exc:
        raise EigensolverError(str(exc)) from exc
    return float(w[0])


def _zval(z):
    if isinstance(z, SpectralPoint):
        return z.z
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("resolvent evaluations need Im z > 0")
    return z


def green_entry(sd: SpectralData, i: int, j: int, z) -> complex:
    """``G_ij(z) = sum_a u_a(i) u_a(j) / (lambda_a - z)``."""
    U = sd._need_vectors()
    z = _zval(z)
    return complex(np.sum(U[i, :] * U[j, :] / (sd.eigenvalues - z)))


def green_evaluation(sd: SpectralData, z, pairs) -> GreenEvaluation:
    zp = z if isinstance(z, SpectralPoint) else SpectralPoint(complex(z).real, complex(z).imag)
    entries = {(i, j): green_entry(sd, i, j, zp) for i, j in pairs}
    return GreenEvaluation(zp, entries, complex(stieltjes(sd, zp)))


def stieltjes(sd: SpectralData, z):
    """Normalized trace of the resolvent; ``z`` may be an array."""
    if isinstance(z, SpectralPoint):
        z = z.z
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("resolvent evaluations need Im z > 0")
    out = np.mean(1.0 / (sd.eigenvalues[:, None] - z.reshape(1, -1)), axis=0).reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def counting(sd: SpectralData, E):
    """Normalized counting function ``#{lambda_j <= E} / N``."""
    out = np.searchsorted(sd.eigenvalues, np.asarray(E, dtype=float), side="right") / sd.N
    return out[()] if np.ndim(out) == 0 else out


def counting_sup_deviation(sd: SpectralData, lo: float = -5.0, hi: float = 5.0) -> float:
    """Exact ``sup_{lo <= E <= hi} |counting(E) - n_sc(E)|``.

    The supremum of a step function against a continuous increasing one is
    attained at a jump (one-sided limits) or at the window ends.
    """
    lam = sd.eigenvalues
    N = sd.N
    k = np.arange(1, N + 1)
    inside = (lam >= lo) & (lam <= hi)
    F = n_sc(lam[inside])
    cand = [np.abs(k[inside] / N - F), np.abs((k[inside] - 1) / N - F)]
    ends = np.array([lo, hi])
    cand.append(np.abs(np.atleast_1d(counting(sd, ends)) - n_sc(ends)))
    return float(max(np.max(c) if c.size else 0.0 for c in cand))


def delocalization_stat(sd: SpectralData) -> float:
    """``N * max_{a,i} |u_a(i)|^2``."""
    U = sd._need_vectors()
    return float(sd.N * np.max(U * U))


def operator_norm(sd: SpectralData) -> float:
    return float(max(abs(sd.eigenvalues[0]), abs(sd.eigenvalues[-1])))


def rigidity_max(eigenvalues, gammas=None) -> float:
    """``max_j N^{2/3} min(j, N-j+1)^{1/3} |lambda_j - gamma_j|``."""
    lam = np.asarray(eigenvalues, dtype=float)
    N = len(lam)
    if gammas is None:
        gammas = classical_locations(N)
    j = np.arange(1, N + 1)
    w = np.minimum(j, N - j + 1) ** (1.0 / 3.0)
    return float(np.max(N ** (2.0 / 3.0) * w * np.abs(lam - gammas)))


def resolvent_expansion_residual(Q, V, z, order: int) -> float:
    """``max |R - sum_{m=0}^{order} (S V)^m S|`` for ``R = (Q - z)^-1``, ``S = (Q + V - z)^-1``.

    ``V`` must vanish outside one symmetric pair ``(a, b), (b, a)`` (or a
    single diagonal entry).
    """
    z = _zval(z)
    Q = _check_symmetric(Q)
    V = _check_symmetric(V)
    nz = np.argwhere(V != 0)
    if len({frozenset((int(i), int(j))) for i, j in nz}) > 1:
        raise ValueError("V must be supported on a single index pair")
    if order < 0:
        raise ValueError("order must be nonnegative")
    n = Q.shape[0]
    eye = np.eye(n)
    R = np.linalg.solve(Q - z * eye, eye.astype(complex))
    S = np.linalg.solve(Q + V - z * eye, eye.astype(complex))
    SV = S @ V
    term = S.copy()
    total = S.copy()
    for _ in range(order):
        term = SV @ term
        total += term
    return float(np.max(np.abs(R - total)))
