"""Edge statistics of Wigner matrices: semicircle law, Tracy-Widom laws,
heavy-tailed ensembles and the cutoff decomposition of their large entries."""

from .decomposition import cutoff_params, necessity_witness, secular_roots, split_sample
from .ensembles import EnsembleSpec, goe, parse_distribution, sample_wigner, wigner
from .semicircle import gamma, msc, n_sc, rho_sc
from .spectra import eigh, largest_eigenvalue
from .tracywidom import tw_cdf, tw_mean, tw_quantile, tw_table

__version__ = "0.1.0"

__all__ = [
    "cutoff_params",
    "necessity_witness",
    "secular_roots",
    "split_sample",
    "EnsembleSpec",
    "goe",
    "parse_distribution",
    "sample_wigner",
    "wigner",
    "gamma",
    "msc",
    "n_sc",
    "rho_sc",
    "eigh",
    "largest_eigenvalue",
    "tw_cdf",
    "tw_mean",
    "tw_quantile",
    "tw_table",
]
