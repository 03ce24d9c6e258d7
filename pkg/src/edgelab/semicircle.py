"""Semicircle law: Stieltjes transform, density, distribution function and
classical eigenvalue locations.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralPoint",
    "SemicircleValue",
    "msc",
    "rho_sc",
    "n_sc",
    "gamma",
    "classical_locations",
    "semicircle_value",
]

_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class SpectralPoint:
    """A point ``z = E + i*eta`` of the upper half plane."""

    E: float
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")

    @property
    def z(self) -> complex:
        return complex(self.E, self.eta)

    @property
    def kappa(self) -> float:
        """Distance of the energy to the nearest spectral edge."""
        return abs(abs(self.E) - 2.0)


@dataclass(frozen=True)
class SemicircleValue:
    m: complex
    rho: float
    ncdf: float


def _as_z(z):
    if isinstance(z, SpectralPoint):
        return z.z
    return z


def msc(z):
    """Stieltjes transform of the semicircle law.

    Both roots of ``m**2 + z*m + 1 = 0`` are formed (the pair multiplies to
    one, so the small root is taken as the reciprocal of the large one) and
    the root with positive imaginary part is returned.

    Args:
        z: complex scalar/array with ``Im z > 0``, or a ``SpectralPoint``.

    Raises:
        ValueError: if any ``Im z <= 0``.
    """
    z = np.asarray(_as_z(z), dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("msc requires Im z > 0")
    r = np.sqrt(z * z - 4.0)
    # pick the sign that avoids cancellation in -(z +/- r)/2
    sgn = np.where((z.conjugate() * r).real >= 0, 1.0, -1.0)
    big = -(z + sgn * r) / 2.0
    small = 1.0 / big
    m = np.where(small.imag > 0, small, big)
    return m[()] if m.ndim == 0 else m


def rho_sc(E):
    """Semicircle density ``sqrt((4 - E^2)_+) / (2 pi)``."""
    E = np.asarray(E, dtype=float)
    out = np.sqrt(np.clip(4.0 - E * E, 0.0, None)) / (2.0 * np.pi)
    return out[()] if out.ndim == 0 else out


def n_sc(E):
    """Semicircle distribution function, in closed form."""
    E = np.asarray(E, dtype=float)
    Ec = np.clip(E, -2.0, 2.0)
    val = 0.5 + Ec * np.sqrt(4.0 - Ec * Ec) / (4.0 * np.pi) + np.arcsin(Ec / 2.0) / np.pi
    out = np.where(E <= -2.0, 0.0, np.where(E >= 2.0, 1.0, val))
    return out[()] if out.ndim == 0 else out


def _bisect_quantile(target):
    """Solve ``n_sc(g) = target`` elementwise by bisection on [-2, 2]."""
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, -2.0)
    hi = np.full(target.shape, 2.0)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f = n_sc(mid)
        exact = f == target
        lo = np.where(exact | (f < target), mid, lo)
        hi = np.where(exact | (f > target), mid, hi)
        if np.all(hi - lo <= 0.0) or np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def gamma(j, N: int):
    """Classical location of the ``j``-th eigenvalue (1-based) among ``N``.

    Defined by ``N * n_sc(gamma_j) = j``; ``gamma_N == 2`` exactly.
    """
    j_arr = np.asarray(j)
    if np.any(j_arr < 1) or np.any(j_arr > N):
        raise ValueError(f"index j must lie in 1..{N}")
    jf = j_arr.astype(float)
    out = np.where(j_arr == N, 2.0, _bisect_quantile(jf / N))
    return out[()] if out.ndim == 0 else out


def classical_locations(N: int) -> np.ndarray:
    """All ``gamma_1 < ... < gamma_N`` for a matrix of size ``N``."""
    return gamma(np.arange(1, N + 1), N)


def semicircle_value(point: SpectralPoint) -> SemicircleValue:
    return SemicircleValue(
        m=complex(msc(point)), rho=float(rho_sc(point.E)), ncdf=float(n_sc(point.E))
    )
