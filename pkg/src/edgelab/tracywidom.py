"""Tracy-Widom distributions F1 and F2.

Two independent routes:

* the Hastings-McLeod solution of Painleve II, integrated from ``s_max``
  towards ``-inf`` together with the integrals that give ``log F2`` and
  ``log F1``;
* the Fredholm determinant ``det(I - K_Airy)`` on ``L^2(s, inf)`` by Nystrom
  discretization with a compactified Gauss-Legendre rule.

The published table uses the Painleve route and carries the Fredholm column
alongside it for the cross-check.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .airy import airy

__all__ = [
    "PainleveBlowup",
    "FredholmConvergenceError",
    "HastingsMcLeod",
    "TWTable",
    "hastings_mcleod",
    "q_left_asymptotic",
    "fredholm_f2",
    "fredholm_f2_checked",
    "tw_table",
    "tw_cdf",
    "tw_pdf",
    "tw_quantile",
    "tw_mean",
]

log = logging.getLogger(__name__)

S_MATCH = 8.0
ODE_RTOL = 1e-13
ODE_ATOL = 1e-20
BVP_TOL = 1e-12
FREDHOLM_SCALE = 10.0


class PainleveBlowup(RuntimeError):
    pass


class FredholmConvergenceError(RuntimeError):
    pass


def _boundary_state(s_max: float):
    """Solution state at ``s_max`` from Airy data.

    ``q`` is matched to ``Ai``; the tail integrals use
    ``int_s^inf Ai^2 = Ai'^2 - s Ai^2`` and
    ``int_s^inf (x - s) Ai^2 = (2 s^2 Ai^2 - 2 s Ai'^2 - Ai Ai') / 3``.
    """
    a, ap = airy(s_max)
    J = ap * ap - s_max * a * a
    I = (2.0 * s_max**2 * a * a - 2.0 * s_max * ap * ap - a * ap) / 3.0
    K, _ = integrate.quad(lambda x: airy(x)[0], s_max, 40.0, epsabs=1e-22, epsrel=1e-13, limit=200)
    return np.array([a, ap, I, J, K])


def _rhs(s, y):
    q, qp, _I, J, _K = y
    return [qp, s * q + 2.0 * q**3, -J, -q * q, -q]


def q_left_asymptotic(s):
    """Hastings-McLeod expansion as ``s -> -inf``."""
    s = np.asarray(s, dtype=float)
    return np.sqrt(-s / 2.0) * (1.0 + 1.0 / (8.0 * s**3) - 73.0 / (128.0 * s**6) + 10657.0 / (1024.0 * s**9))


@dataclass(frozen=True)
class HastingsMcLeod:
    """Hastings-McLeod solution sampled on an ascending grid.

    ``I = int_s^inf (x - s) q^2``, ``J = int_s^inf q^2``, ``K = int_s^inf q``.
    """

    s: np.ndarray
    q: np.ndarray
    qp: np.ndarray
    I: np.ndarray
    J: np.ndarray
    K: np.ndarray
    s_max: float
    method: str = "bvp"

    def ode_residual(self) -> float:
        """Residual of ``q'' = s q + 2 q^3`` with a five-point second difference."""
        h = np.diff(self.s)
        if not np.allclose(h, h[0]):
            raise ValueError("residual check needs a uniform grid")
        h = h[0]
        q = self.q
        qpp = (-q[4:] + 16.0 * q[3:-1] - 30.0 * q[2:-2] + 16.0 * q[1:-3] - q[:-4]) / (12.0 * h * h)
        qi = q[2:-2]
        return float(np.max(np.abs(qpp - self.s[2:-2] * qi - 2.0 * qi**3)))

    def hamiltonian_gap(self) -> float:
        """``max |J - (q'^2 - s q^2 - q^4)|``; the right side is a first integral equal to J."""
        return float(np.max(np.abs(self.J - (self.qp**2 - self.s * self.q**2 - self.q**4))))


def _uniform_grid(s_min, s_max, step):
    n = int(round((s_max - s_min) / step))
    grid = s_max - step * np.arange(n + 1)
    grid[-1] = s_min
    return grid


def _ivp(s_min, s_max, grid):
    return integrate.solve_ivp(
        _rhs,
        (s_max, s_min),
        _boundary_state(s_max),
        method="DOP853",
        t_eval=grid,
        dense_output=True,
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )


def _bvp_q(s_max, left):
    """Collocation solve of Painleve II on ``[left, s_max]``.

    Right condition ``q = Ai``, left condition from the ``-inf`` expansion.
    """
    split = -6.0
    guide = integrate.solve_ivp(
        _rhs, (s_max, split), _boundary_state(s_max), method="DOP853",
        dense_output=True, rtol=ODE_RTOL, atol=ODE_ATOL,
    )
    x = np.linspace(left, s_max, 2001)
    q0 = np.where(x > split, guide.sol(np.maximum(x, split))[0], q_left_asymptotic(np.minimum(x, -1.0)))
    y0 = np.vstack([q0, np.gradient(q0, x)])
    q_right = airy(s_max)[0]
    q_left = float(q_left_asymptotic(left))

    def f(s, y):
        return np.vstack([y[1], s * y[0] + 2.0 * y[0] ** 3])

    def bc(ya, yb):
        return np.array([ya[0] - q_left, yb[0] - q_right])

    sol = integrate.solve_bvp(f, bc, x, y0, tol=BVP_TOL, max_nodes=400_000, bc_tol=1e-14)
    if sol.status != 0:
        raise PainleveBlowup(f"Painleve II boundary-value solve failed: {sol.message}")
    return sol


def hastings_mcleod(
    s_min: float = -10.0, s_max: float = S_MATCH, step: float = 0.02, method: str = "bvp"
) -> HastingsMcLeod:
    """Hastings-McLeod solution and its tail integrals on a uniform grid.

    ``method="bvp"`` (default) solves the two-point problem between the
    ``-inf`` expansion at ``min(s_min - 2, -12)`` and ``q(s_max) = Ai(s_max)``,
    then integrates ``I, J, K`` backwards from ``s_max``.  ``method="ivp"``
    shoots backwards from the Airy data alone; it is accurate for ``s >~ -6``
    but drifts off the separatrix further left.

    Raises:
        PainleveBlowup: integration failure, loss of positivity or of
            monotonicity on ``s <= 0``.
    """
    if s_max < 6.0:
        raise ValueError("s_max must be at least 6 for the Airy boundary data")
    grid = _uniform_grid(s_min, s_max, step)
    if method == "ivp":
        sol = _ivp(s_min, s_max, grid)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)) or sol.t[-1] != s_min:
            raise PainleveBlowup(f"Painleve II integration failed before s={s_min}: {sol.message}")
        y = sol.y[:, ::-1]
    elif method == "bvp":
        qsol = _bvp_q(s_max, min(s_min - 2.0, -12.0))

        def rhs(s, y):
            q = qsol.sol(s)[0]
            return [-y[1], -q * q, -q]

        b = _boundary_state(s_max)
        quad = integrate.solve_ivp(
            rhs, (s_max, s_min), b[2:], method="DOP853", t_eval=grid, rtol=ODE_RTOL, atol=ODE_ATOL
        )
        if quad.status != 0:
            raise PainleveBlowup(f"tail integrals failed: {quad.message}")
        qq = qsol.sol(quad.t)
        y = np.vstack([qq, quad.y])[:, ::-1]
    else:
        raise ValueError(f"unknown method {method!r}")
    s = grid[::-1]
    q = y[0]
    if not np.all(np.isfinite(y)):
        raise PainleveBlowup("non-finite values in the Painleve II solution")
    if np.any(q <= 0):
        raise PainleveBlowup("q changed sign: boundary matching is off the Hastings-McLeod solution")
    neg = s <= 0
    if np.any(np.diff(q[neg]) > 0):
        raise PainleveBlowup("q is not decreasing on s <= 0")
    return HastingsMcLeod(s, q, y[1], y[2], y[3], y[4], s_max, method)


def _fredholm_matrix(s: float, nodes: int):
    u, w = np.polynomial.legendre.leggauss(nodes)
    theta = np.pi * (u + 1.0) / 4.0
    x = s + FREDHOLM_SCALE * np.tan(theta)
    wx = w * FREDHOLM_SCALE * (np.pi / 4.0) / np.cos(theta) ** 2
    keep = x <= 40.0  # Ai(40) ~ 1e-74: the kernel is zero beyond
    x, wx = x[keep], wx[keep]
    a, ap = airy(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    K = (a[:, None] * ap[None, :] - ap[:, None] * a[None, :]) / diff
    np.fill_diagonal(K, ap * ap - x * a * a)
    sw = np.sqrt(wx)
    return np.eye(len(x)) - sw[:, None] * K * sw[None, :]


def fredholm_f2(s: float, nodes: int = 60) -> float:
    """``F2(s) = det(I - K_Airy)`` restricted to ``(s, inf)``."""
    if nodes < 40:
        raise ValueError("use at least 40 quadrature nodes")
    if s >= 40.0:
        return 1.0
    return float(np.linalg.det(_fredholm_matrix(float(s), nodes)))


def fredholm_f2_checked(s: float, nodes: int = 60, tol: float = 1e-8) -> float:
    """``fredholm_f2`` with a refinement check between ``nodes`` and ``2 * nodes``."""
    coarse = fredholm_f2(s, nodes)
    fine = fredholm_f2(s, 2 * nodes)
    if abs(coarse - fine) > tol:
        raise FredholmConvergenceError(
            f"Fredholm determinant at s={s} changed by {abs(coarse - fine):.2e} between {nodes} and {2 * nodes} nodes"
        )
    return fine


@dataclass(frozen=True)
class TWTable:
    s_grid: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    F2_fredholm: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def route_gap(self) -> float:
        return float(np.max(np.abs(self.F2 - self.F2_fredholm)))

    def column(self, beta: int) -> np.ndarray:
        if beta == 1:
            return self.F1
        if beta == 2:
            return self.F2
        raise ValueError("beta must be 1 or 2")

    @property
    def interpolants(self):
        return _interpolants(self)


_INTERP_CACHE: dict = {}


def _interpolants(table: TWTable):
    key = id(table)
    if key not in _INTERP_CACHE:
        _INTERP_CACHE[key] = {b: PchipInterpolator(table.s_grid, table.column(b)) for b in (1, 2)}
    return _INTERP_CACHE[key]


@lru_cache(maxsize=4)
def tw_table(lo: float = -10.0, hi: float = 8.0, step: float = 0.02, nodes: int = 60) -> TWTable:
    """Tabulate F1 and F2 on ``[lo, hi]`` by both routes (cached per process)."""
    hm = hastings_mcleod(s_min=lo, s_max=S_MATCH, step=step)
    sel = hm.s <= hi + 1e-9
    s = hm.s[sel]
    F2 = np.exp(-hm.I[sel])
    F1 = np.exp(-0.5 * hm.I[sel] - 0.5 * hm.K[sel])
    F2f = np.array([fredholm_f2(v, nodes) for v in s])
    table = TWTable(
        s_grid=s,
        F1=F1,
        F2=F2,
        F2_fredholm=F2f,
        meta={
            "route": "painleve",
            "s_match": S_MATCH,
            "rtol": ODE_RTOL,
            "fredholm_nodes": nodes,
            "fredholm_map": "x = s + 10 tan(pi (u + 1) / 4)",
        },
    )
    log.debug("TW table built: %d nodes, route gap %.2e", len(s), table.route_gap)
    return table


def tw_cdf(beta: int, s, table: TWTable | None = None):
    """F_beta(s) by monotone interpolation of the table; out-of-range ``s`` is clipped."""
    table = table or tw_table()
    s = np.asarray(s, dtype=float)
    lo, hi = table.s_grid[0], table.s_grid[-1]
    if np.any((s < lo) | (s > hi)):
        warnings.warn(f"s outside the tabulated range [{lo}, {hi}] was clipped", RuntimeWarning, stacklevel=2)
    out = _interpolants(table)[beta](np.clip(s, lo, hi))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def tw_pdf(beta: int, s, table: TWTable | None = None):
    table = table or tw_table()
    s = np.clip(np.asarray(s, dtype=float), table.s_grid[0], table.s_grid[-1])
    out = _interpolants(table)[beta].derivative()(s)
    return float(out) if np.ndim(out) == 0 else out


def tw_quantile(beta: int, p: float, table: TWTable | None = None) -> float:
    """Inverse of ``tw_cdf`` by bisection."""
    table = table or tw_table()
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = float(table.s_grid[0]), float(table.s_grid[-1])
    f = _interpolants(table)[beta]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def tw_mean(beta: int, table: TWTable | None = None, route: str = "painleve") -> float:
    """Mean of F_beta as ``hi - int F ds + lo F(lo)`` (integration by parts).

    ``route="fredholm"`` uses the Fredholm F2 column (``beta=2`` only).
    """
    table = table or tw_table()
    s = table.s_grid
    if route == "fredholm":
        if beta != 2:
            raise ValueError("the Fredholm route only gives F2")
        F = table.F2_fredholm
    elif route == "painleve":
        F = table.column(beta)
    else:
        raise ValueError(f"unknown route {route!r}")
    return float(s[-1] - integrate.simpson(F, x=s) + s[0] * F[0])
