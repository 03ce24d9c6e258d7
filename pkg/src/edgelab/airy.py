"""Airy function ``Ai`` and its derivative on ``[-40, 40]``.

For ``s <= 2`` the value comes from a local power series of ``y'' = s y``
about the nearest node of a grid of step 1/8; the nodes are generated once
by stepping the same series outwards from the closed-form values at 0.
Stepping towards ``-inf`` is stable because both Airy solutions oscillate
with comparable amplitude there.

For ``s > 2`` the representation ``Ai(s) = sqrt(s/3) K_{1/3}(zeta) / pi`` is
used, with ``K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`` evaluated by
the trapezoidal rule, which converges geometrically for this integrand.

``airy_asymptotic`` gives the large-``s`` expansion and serves as an
independent cross-check for ``s >= 8``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = ["airy", "ai", "airy_asymptotic", "AI0", "AIP0", "AIRY_RANGE"]

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
AIRY_RANGE = 40.0

_STEP = 0.125
_TERMS = 40
_SERIES_MAX = 2.0


def _taylor(x0, y0, yp0, d):
    """Propagate ``(y, y')`` of ``y'' = x y`` from ``x0`` by ``d`` with a local series."""
    d = np.asarray(d, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    c = [np.asarray(y0, dtype=float) + 0.0 * d, np.asarray(yp0, dtype=float) + 0.0 * d]
    y = c[0] + c[1] * d
    yp = c[1].copy()
    dn = d.copy()  # d**(n-1)
    for n in range(2, _TERMS):
        # n (n-1) c_n = x0 c_{n-2} + c_{n-3}
        cn = x0 * c[n - 2]
        if n >= 3:
            cn = cn + c[n - 3]
        cn = cn / (n * (n - 1))
        c.append(cn)
        yp = yp + n * cn * dn
        dn = dn * d
        y = y + cn * dn
    return y, yp


@lru_cache(maxsize=1)
def _nodes():
    xs, ys, yps = [0.0], [AI0], [AIP0]
    x, y, yp = 0.0, AI0, AIP0
    n_neg = int(round(AIRY_RANGE / _STEP)) + 1
    for _ in range(n_neg):
        y, yp = _taylor(x, y, yp, -_STEP)
        x -= _STEP
        xs.append(x)
        ys.append(float(y))
        yps.append(float(yp))
    xs, ys, yps = xs[::-1], ys[::-1], yps[::-1]
    x, y, yp = 0.0, AI0, AIP0
    while x < _SERIES_MAX + _STEP:
        y, yp = _taylor(x, y, yp, _STEP)
        x += _STEP
        xs.append(x)
        ys.append(float(y))
        yps.append(float(yp))
    return np.array(xs), np.array(ys), np.array(yps)


def _airy_series(s):
    xs, ys, yps = _nodes()
    k = np.clip(np.rint((s - xs[0]) / _STEP).astype(int), 0, len(xs) - 1)
    return _taylor(xs[k], ys[k], yps[k], s - xs[k])


_KT = np.arange(0.0, 8.0 + 1e-12, 0.02)
_KW = np.full(_KT.shape, 0.02)
_KW[0] = 0.01


def _airy_bessel(s):
    s = np.asarray(s, dtype=float)
    zeta = (2.0 / 3.0) * s**1.5
    e = np.exp(-np.multiply.outer(zeta, np.cosh(_KT) - 1.0))
    k13 = e @ (_KW * np.cosh(_KT / 3.0))
    k23 = e @ (_KW * np.cosh(2.0 * _KT / 3.0))
    ez = np.exp(-zeta)
    return ez * np.sqrt(s / 3.0) / np.pi * k13, -ez * s / (np.pi * math.sqrt(3.0)) * k23


def airy(s):
    """Return ``(Ai(s), Ai'(s))`` for ``|s| <= 40``."""
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(np.abs(s) > AIRY_RANGE):
        raise ValueError(f"airy is implemented for |s| <= {AIRY_RANGE}")
    flat = s.ravel()
    a = np.empty_like(flat)
    ap = np.empty_like(flat)
    low = flat <= _SERIES_MAX
    if np.any(low):
        a[low], ap[low] = _airy_series(flat[low])
    if np.any(~low):
        a[~low], ap[~low] = _airy_bessel(flat[~low])
    a = a.reshape(s.shape)
    ap = ap.reshape(s.shape)
    if s.ndim == 0:
        return float(a), float(ap)
    return a, ap


def ai(s):
    return airy(s)[0]


def airy_asymptotic(s, terms: int = 12):
    """Large positive ``s`` expansion of ``(Ai, Ai')``; accurate for ``s >= 8``."""
    s = np.asarray(s, dtype=float)
    zeta = (2.0 / 3.0) * s**1.5
    su = np.zeros_like(s)
    sv = np.zeros_like(s)
    for k in range(terms):
        uk = math.gamma(3 * k + 0.5) / (54.0**k * math.factorial(k) * math.gamma(k + 0.5))
        vk = -(6 * k + 1) / (6 * k - 1) * uk
        sign = (-1.0) ** k
        su = su + sign * uk / zeta**k
        sv = sv + sign * vk / zeta**k
    pref = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    return pref * su / s**0.25, -pref * sv * s**0.25
