"""Random small instances for the secular-equation checks, shared by tests."""

import numpy as np

from edgelab.decomposition import build_low_rank, secular_residual, secular_roots, secular_tolerance
from edgelab.ensembles import goe, sample_wigner
from edgelab.rng import substream
from edgelab.spectra import eigh


def random_instance(key, N_max=60, rank_max=4):
    rng = substream(0x5EC, key)
    N = int(rng.integers(6, N_max + 1))
    HS = sample_wigner(goe(N), rng)
    rank = int(rng.integers(1, rank_max + 1))
    n_pairs = int(rng.integers(0, rank // 2 + 1))
    n_singles = rank - 2 * n_pairs
    idx = rng.permutation(N)
    entries = []
    for n in range(n_pairs):
        entries.append((int(idx[2 * n]), int(idx[2 * n + 1]), float(rng.choice([-1, 1]) * rng.uniform(0.2, 4))))
    for n in range(n_singles):
        i = int(idx[2 * n_pairs + n])
        entries.append((i, i, float(rng.choice([-1, 1]) * rng.uniform(0.2, 4))))
    return HS, build_low_rank(entries, N)


def match_instance(HS, pert, pole_tol=1e-9, match_tol=1e-9):
    """Compare secular roots with the dense spectrum of ``H^S + E``.

    Returns ``(ok, detail)``; ``ok`` means a one-to-one match and every dense
    eigenvalue away from ``spec(H^S)`` passes the residual tolerance.
    """
    sd = eigh(HS)
    roots = secular_roots(sd, pert)
    dense = np.linalg.eigvalsh(HS + pert.dense())
    # backward error of a dense symmetric eigensolve
    mu_err = 4 * len(dense) * np.finfo(float).eps * np.max(np.abs(dense))
    lam = sd.eigenvalues
    outside = np.array([mu for mu in dense if np.min(np.abs(lam - mu)) > pole_tol])
    if len(outside) != len(roots):
        return False, f"{len(roots)} roots vs {len(outside)} eigenvalues"
    if len(roots) and np.max(np.abs(np.sort(outside) - roots)) > match_tol * max(1.0, np.max(np.abs(roots))):
        return False, f"mismatch {np.max(np.abs(np.sort(outside) - roots)):.3g}"
    for mu in outside:
        if secular_residual(sd, pert, mu) > secular_tolerance(sd, pert, mu, mu_err=mu_err):
            return False, f"residual at {mu} above tolerance"
    return True, f"{len(roots)} roots matched"
