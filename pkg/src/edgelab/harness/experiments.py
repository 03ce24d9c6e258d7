"""Monte Carlo experiments behind the command line tools.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport` holding the per-trial rows, a JSON-able summary and
a verdict against the configured thresholds.  Nothing is written to disk
here; see :func:`write_report`.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .. import decomposition as dec
from ..ensembles import goe_tridiagonal, sample_wigner
from ..semicircle import classical_locations
from ..spectra import (
    EigensolverError,
    counting_sup_deviation,
    delocalization_stat,
    eigh,
    largest_eigenvalue,
    largest_eigenvalue_tridiagonal,
    operator_norm,
    rigidity_max,
)
from ..stats import PolylogScale, binomial_ci, ks_one_sample, ks_two_sample, running_moment_slope
from ..tracywidom import tw_cdf, tw_table
from .config import ConfigError, ExperimentConfig
from .io import CSV_SCHEMAS, emit_csv
from .runner import run_trials

__all__ = [
    "ExperimentReport",
    "rescale_edge",
    "run_edge_experiment",
    "necessity_trial",
    "run_necessity_experiment",
    "run_rigidity_experiment",
    "run_delocalization_experiment",
    "run_tracking_experiment",
    "run_tw_table",
    "run_decompose_demo",
    "run_experiment",
    "write_report",
]

RECOVERABLE = (EigensolverError, np.linalg.LinAlgError)
MOMENT_SLOPE_FLAG = 0.3

log = logging.getLogger(__name__)


@dataclass
class ExperimentReport:
    kind: str
    config: ExperimentConfig
    tables: dict = field(default_factory=dict)  # csv name -> (columns, rows)
    summary: dict = field(default_factory=dict)
    passed: bool = True
    messages: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)  # in-memory data for figures

    def fail(self, msg: str):
        self.passed = False
        self.messages.append(msg)


def rescale_edge(lam, N):
    """``N^(2/3) (lambda - 2)``."""
    return N ** (2.0 / 3.0) * (np.asarray(lam, dtype=float) - 2.0)


def _is_goe(cfg, label):
    return cfg.ensembles[label].strip() == "goe" and label not in cfg.diagonals


def _labels(cfg):
    if not cfg.ensembles:
        raise ConfigError(f"{cfg.kind}: no ensembles configured")
    return list(cfg.ensembles)


def _column(sink_rows, name):
    return np.array([r[name] for r in sink_rows], dtype=float)


# --------------------------------------------------------------------------


def run_edge_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Largest eigenvalue at the edge, compared with GOE and with F1."""
    rep = ExperimentReport("edge-dist", cfg)
    p = cfg.params
    ref = p["reference"]
    labels = _labels(cfg)
    if ref not in labels:
        raise ConfigError(f"edge-dist: reference ensemble {ref!r} is not configured")
    forced = []
    for label in labels:
        spec = cfg.ensemble(label, 2)
        if not spec.offdiag.criterion_holds:
            if not cfg.force:
                raise ConfigError(
                    f"edge-dist: ensemble {label!r} ({spec.offdiag.descriptor()}) violates the tail criterion; "
                    "pass --force to run it anyway"
                )
            forced.append(label)
    table = tw_table()
    samples = {}
    rows = []
    for N in cfg.sizes:
        for label in labels:
            spec = cfg.ensemble(label, N)
            if _is_goe(cfg, label) and p["goe_method"] == "tridiagonal":

                def trial(k, rng, N=N):
                    return {"lambda_max": largest_eigenvalue_tridiagonal(*goe_tridiagonal(N, rng))}

            elif p["goe_method"] not in ("dense", "tridiagonal"):
                raise ConfigError(f"edge-dist: goe_method must be dense or tridiagonal, got {p['goe_method']!r}")
            else:

                def trial(k, rng, spec=spec):
                    return {"lambda_max": largest_eigenvalue(sample_wigner(spec, rng))}

            sink = run_trials(trial, cfg.trials, cfg.seed, label, N, cfg.threads, RECOVERABLE)
            got = sink.ordered()
            for r in got:
                r["rescaled"] = float(rescale_edge(r["lambda_max"], N))
                r["ensemble"] = label
            rows.extend(got)
            samples[(label, N)] = _column(got, "rescaled")
            rep.summary.setdefault("failures", {})[f"{label}@{N}"] = len(sink.failures)

    stats = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for (label, N), x in samples.items():
            ks1 = ks_one_sample(x, lambda s: tw_cdf(1, s, table))
            entry = {
                "N": N,
                "trials": int(x.size),
                "mean": float(np.mean(x)),
                "std": float(np.std(x, ddof=1)) if x.size > 1 else float("nan"),
                "ks_f1": ks1.d,
                "ks_f1_pvalue": ks1.pvalue,
                "forced": label in forced,
            }
            if label != ref:
                ks2 = ks_two_sample(x, samples[(ref, N)])
                entry["ks_vs_reference"] = ks2.d
                entry["ks_vs_reference_pvalue"] = ks2.pvalue
                if label not in forced and ks2.d > p["ks_threshold"]:
                    rep.fail(f"{label} at N={N}: KS distance to {ref} {ks2.d:.4f} > {p['ks_threshold']}")
            stats[f"{label}@{N}"] = entry
    rep.summary["ensembles"] = stats
    rep.summary["threshold"] = p["ks_threshold"]
    rep.tables["edge"] = (CSV_SCHEMAS["edge"], rows)
    rep.extras["samples"] = samples
    return rep


# --------------------------------------------------------------------------


def necessity_trial(H) -> dict:
    lam = largest_eigenvalue(H)
    return {"lambda_max": lam, "exceeds3": lam >= 3.0, "witness_found": dec.necessity_witness(H) is not None}


def run_necessity_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Frequency of ``lambda_N >= 3`` with Wilson intervals, plus the two-entry witness."""
    rep = ExperimentReport("necessity", cfg)
    p = cfg.params
    rows = []
    stats = {}
    for label in _labels(cfg):
        role = "control" if cfg.ensemble(label, 2).offdiag.criterion_holds else "violating"
        estimates = []
        for N in cfg.sizes:
            spec = cfg.ensemble(label, N)

            def trial(k, rng, spec=spec):
                return necessity_trial(sample_wigner(spec, rng))

            got = run_trials(trial, cfg.trials, cfg.seed, label, N, cfg.threads, RECOVERABLE).ordered()
            for r in got:
                r["ensemble"] = label
            rows.extend(got)
            hits = sum(r["exceeds3"] for r in got)
            wit = sum(r["witness_found"] for r in got)
            lo, hi = binomial_ci(hits, len(got))
            estimates.append(hits / len(got))
            stats[f"{label}@{N}"] = {
                "N": N,
                "role": role,
                "trials": len(got),
                "exceed": hits,
                "p_hat": hits / len(got),
                "wilson_lo": lo,
                "wilson_hi": hi,
                "witnesses": wit,
                "witness_without_exceed": sum(r["witness_found"] and not r["exceeds3"] for r in got),
            }
            if role == "violating" and lo <= p["lower_threshold"]:
                rep.fail(f"{label} at N={N}: Wilson lower bound {lo:.4g} <= {p['lower_threshold']}")
            if role == "control" and hi >= p["control_upper"]:
                rep.fail(f"{label} at N={N}: control upper bound {hi:.4g} >= {p['control_upper']}")
        if role == "violating" and len(estimates) > 1:
            first, last = estimates[0], estimates[-1]
            decay = first / last if last > 0 else math.inf
            stats[f"{label}:decay"] = decay
            if decay > p["max_decay"]:
                rep.fail(f"{label}: estimate decays by {decay:.3g}x from N={cfg.sizes[0]} to N={cfg.sizes[-1]}")
    rep.summary["ensembles"] = stats
    rep.tables["necessity"] = (CSV_SCHEMAS["necessity"], rows)
    return rep


# --------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _gammas(N):
    return classical_locations(N)


def fourth_moment_slope(dist, seed: int, n: int = 200_000) -> float:
    """Log-log growth rate of the running fourth moment of ``n`` entry draws."""
    from ..rng import substream

    return running_moment_slope(dist.sample(substream(seed, 0x4D4F4D), n), k=4)


def run_rigidity_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("rigidity", cfg)
    p = cfg.params
    rows = []
    stats = {}
    for label in _labels(cfg):
        slope = fourth_moment_slope(cfg.ensemble(label, 2).offdiag, cfg.seed)
        stats[f"{label}:fourth_moment_slope"] = slope
        if slope > MOMENT_SLOPE_FLAG:
            log.warning("ensemble %r: running fourth moment grows (slope %.2f); rigidity bounds may not apply", label, slope)
        for N in cfg.sizes:
            spec = cfg.ensemble(label, N)
            gam = _gammas(N)

            def trial(k, rng, spec=spec, N=N, gam=gam):
                sd = eigh(sample_wigner(spec, rng), want_vectors=False)
                return {"rig_max": rigidity_max(sd.eigenvalues, gam), "count_sup": N * counting_sup_deviation(sd)}

            got = run_trials(trial, cfg.trials, cfg.seed, label, N, cfg.threads, RECOVERABLE).ordered()
            for r in got:
                r["ensemble"] = label
            rows.extend(got)
            rig = _column(got, "rig_max")
            cnt = _column(got, "count_sup")
            env = PolylogScale(N, p["envelope_c"]).envelope
            q = float(np.quantile(rig, p["quantile"]))
            cbound = p["count_constant"] * math.log(N) ** 2
            frac = float(np.mean(cnt <= cbound))
            stats[f"{label}@{N}"] = {
                "N": N,
                "trials": len(got),
                "rig_quantile": q,
                "rig_max": float(rig.max()),
                "envelope": env,
                "count_bound": cbound,
                "count_fraction": frac,
                "count_sup_max": float(cnt.max()),
            }
            if q > env:
                rep.fail(f"{label} at N={N}: rigidity quantile {q:.4g} > envelope {env:.4g}")
            if frac < p["min_fraction"]:
                rep.fail(f"{label} at N={N}: counting bound held in {frac:.3f} of trials")
    rep.summary["ensembles"] = stats
    rep.tables["rigidity"] = (CSV_SCHEMAS["rigidity"], rows)
    return rep


def run_delocalization_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("delocalization", cfg)
    p = cfg.params
    rows = []
    stats = {}
    for label in _labels(cfg):
        for N in cfg.sizes:
            spec = cfg.ensemble(label, N)

            def trial(k, rng, spec=spec):
                sd = eigh(sample_wigner(spec, rng), want_vectors=True)
                return {"deloc": delocalization_stat(sd), "norm": operator_norm(sd)}

            got = run_trials(trial, cfg.trials, cfg.seed, label, N, cfg.threads, RECOVERABLE).ordered()
            for r in got:
                r["ensemble"] = label
            rows.extend(got)
            deloc = _column(got, "deloc")
            norm = _column(got, "norm")
            bound = math.log(N) ** 3
            f_deloc = float(np.mean(deloc <= bound))
            f_norm = float(np.mean((norm >= p["norm_lo"]) & (norm <= p["norm_hi"])))
            stats[f"{label}@{N}"] = {
                "N": N,
                "trials": len(got),
                "deloc_bound": bound,
                "deloc_max": float(deloc.max()),
                "deloc_fraction": f_deloc,
                "norm_min": float(norm.min()),
                "norm_max": float(norm.max()),
                "norm_fraction": f_norm,
            }
            if f_deloc < p["min_fraction"]:
                rep.fail(f"{label} at N={N}: delocalization bound held in {f_deloc:.3f} of trials")
            if f_norm < p["min_fraction"]:
                rep.fail(f"{label} at N={N}: norm window held in {f_norm:.3f} of trials")
    rep.summary["ensembles"] = stats
    rep.tables["delocalization"] = (CSV_SCHEMAS["delocalization"], rows)
    return rep


# --------------------------------------------------------------------------


def run_tracking_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """``|lambda_N(H^S) - lambda_N(H^S + E)| <= N^(-3/4)`` frequency."""
    rep = ExperimentReport("tracking", cfg)
    p = cfg.params
    eps = p["epsilon"]
    if not 0 < eps < 0.5:
        raise ConfigError("tracking: epsilon must lie in (0, 1/2)")
    rows = []
    stats = {}
    for label in _labels(cfg):
        for N in cfg.sizes:
            spec = cfg.ensemble(label, N)

            def trial(k, rng, spec=spec):
                t = dec.tracking_trial(spec, eps, rng)
                return {"gap": t.gap, "gap_ok": t.gap_ok, "rank_E": t.rank_E, "edge_gap_ok": t.edge_gap_ok}

            got = run_trials(trial, cfg.trials, cfg.seed, label, N, cfg.threads, RECOVERABLE).ordered()
            for r in got:
                r["ensemble"] = label
            rows.extend(got)
            ok = np.array([r["gap_ok"] for r in got])
            sep = np.array([r["edge_gap_ok"] for r in got])
            freq = float(ok.mean())
            stats[f"{label}@{N}"] = {
                "N": N,
                "trials": len(got),
                "frequency": freq,
                "frequency_edge_separated": float(ok[sep].mean()) if sep.any() else float("nan"),
                "edge_gap_violations": int((~sep).sum()),
                "nonzero_rank": int(sum(r["rank_E"] > 0 for r in got)),
                "max_gap": float(max(r["gap"] for r in got)),
            }
            if freq < p["min_frequency"]:
                rep.fail(f"{label} at N={N}: tracking frequency {freq:.3f} < {p['min_frequency']}")
    rep.summary["ensembles"] = stats
    rep.tables["tracking"] = (CSV_SCHEMAS["tracking"], rows)
    return rep


# --------------------------------------------------------------------------


def run_tw_table(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("tw-table", cfg)
    p = cfg.params
    table = tw_table(p["lo"], p["hi"], p["step"], p["nodes"])
    rows = [{"s": float(s), "F1": float(a), "F2": float(b)} for s, a, b in zip(table.s_grid, table.F1, table.F2)]
    rep.summary = {"route_gap": table.route_gap, "nodes": len(rows), **{k: v for k, v in table.meta.items()}}
    if table.route_gap > p["route_tol"]:
        rep.fail(f"Painleve and Fredholm routes differ by {table.route_gap:.3g} > {p['route_tol']}")
    rep.tables["tw"] = (CSV_SCHEMAS["tw"], rows)
    rep.extras["table"] = table
    return rep


def run_decompose_demo(cfg: ExperimentConfig) -> ExperimentReport:
    """One cutoff decomposition: secular roots against a dense eigensolve."""
    rep = ExperimentReport("decompose-demo", cfg)
    eps = cfg.params["epsilon"]
    label = _labels(cfg)[0]
    N = cfg.sizes[0]
    spec = cfg.ensemble(label, N)
    from ..rng import substream
    from .runner import stream_key

    cs = dec.sample_cutoff_matrices(spec, eps, substream(cfg.seed, stream_key(label), N, 0))
    sd = eigh(cs.HS, want_vectors=True)
    roots = dec.secular_roots(sd, cs.pert)
    dense = np.linalg.eigvalsh(cs.HS + cs.pert.dense())
    rows = []
    for mu in roots:
        near = float(dense[np.argmin(np.abs(dense - mu))])
        rows.append(
            {"mu_secular": float(mu), "mu_dense": near, "residual": dec.secular_residual(sd, cs.pert, float(mu))}
        )
    worst = max((abs(r["mu_secular"] - r["mu_dense"]) for r in rows), default=0.0)
    rep.summary = {
        "N": N,
        "ensemble": label,
        "epsilon": eps,
        "T": dec.cutoff_params(spec.offdiag, N, eps).T,
        "n_large": cs.n_large,
        "rank_E": cs.pert.rank,
        "collisions": cs.collisions,
        "lambda_N_HS": float(sd.eigenvalues[-1]),
        "lambda_N_full": float(dense[-1]),
        "roots": len(rows),
        "worst_root_mismatch": worst,
    }
    if worst > 1e-8:
        rep.fail(f"secular roots differ from dense eigenvalues by {worst:.3g}")
    rep.tables["decompose"] = (("mu_secular", "mu_dense", "residual"), rows)
    return rep


RUNNERS = {
    "edge-dist": run_edge_experiment,
    "necessity": run_necessity_experiment,
    "rigidity": run_rigidity_experiment,
    "delocalization": run_delocalization_experiment,
    "tracking": run_tracking_experiment,
    "tw-table": run_tw_table,
    "decompose-demo": run_decompose_demo,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.kind](cfg)


def write_report(rep: ExperimentReport, out_dir, figures: bool = False) -> list[Path]:
    """CSV tables, ``summary.json`` and the resolved ``config.ini`` under ``out_dir``.

    Tables with several ensembles are split into ``<table>_<label>.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (columns, rows) in rep.tables.items():
        if rows and "ensemble" in rows[0]:
            # one file per ensemble so (trial, N) stays a key
            for label in dict.fromkeys(r["ensemble"] for r in rows):
                sel = [r for r in rows if r["ensemble"] == label]
                written.append(emit_csv(sel, out / f"{name}_{label}.csv", columns))
        else:
            written.append(emit_csv(rows, out / f"{name}.csv", columns))
    written.append(rep.config.override(out=str(out)).write(out / "config.ini"))
    summary = {"kind": rep.kind, "passed": rep.passed, "messages": rep.messages, **rep.summary}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=float, allow_nan=True))
    written.append(out / "summary.json")
    if figures:
        from .. import plotting

        written.extend(plotting.render(rep, out))
    return written
