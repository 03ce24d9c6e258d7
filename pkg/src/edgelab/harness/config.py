"""Experiment configuration: a small INI file.

    [experiment]
    kind = edge-dist
    trials = 2000
    sizes = 500
    seed = 7
    threads = 1
    out = results/edge

    [ensembles]
    goe = goe
    rademacher = rademacher
    pareto = pareto_sym(alpha=4.5)

    [diagonals]
    pareto = gaussian(var=1.0)

    [edge-dist]
    reference = goe
    ks_threshold = 0.06

``[ensembles]`` maps a label to the off-diagonal law (``goe`` is shorthand
for the Gaussian orthogonal ensemble).  The diagonal law defaults to the
off-diagonal one.  The section named after the kind holds its own knobs.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..ensembles import EnsembleSpec, Gaussian, parse_distribution

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "KIND_DEFAULTS", "default_config", "load_config"]

KINDS = ("edge-dist", "necessity", "rigidity", "delocalization", "tracking", "tw-table", "decompose-demo")


class ConfigError(ValueError):
    pass


# per-kind knobs and their defaults; types are taken from the defaults
KIND_DEFAULTS: dict[str, dict] = {
    "edge-dist": {"reference": "goe", "ks_threshold": 0.06, "goe_method": "dense"},
    "necessity": {"lower_threshold": 0.005, "control_upper": 0.01, "max_decay": 2.0},
    "rigidity": {"envelope_c": 2.0, "count_constant": 50.0, "quantile": 0.99, "min_fraction": 0.99},
    "delocalization": {"norm_lo": 1.9, "norm_hi": 2.2, "min_fraction": 0.99},
    "tracking": {"epsilon": 0.05, "min_frequency": 0.9},
    "tw-table": {"lo": -10.0, "hi": 8.0, "step": 0.02, "nodes": 60, "route_tol": 1e-6},
    "decompose-demo": {"epsilon": 0.2},
}


@dataclass
class ExperimentConfig:
    kind: str
    ensembles: dict = field(default_factory=dict)
    diagonals: dict = field(default_factory=dict)
    trials: int = 2000
    sizes: tuple = (100, 200, 400, 500, 1000)
    seed: int = 0
    threads: int = 1
    out: str = "results"
    force: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        self.sizes = tuple(int(n) for n in self.sizes)
        if not self.sizes or min(self.sizes) < 2:
            raise ConfigError("sizes must be a nonempty list of integers >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        merged = dict(KIND_DEFAULTS[self.kind])
        for key, val in self.params.items():
            if key not in merged:
                raise ConfigError(f"unknown key {key!r} for experiment {self.kind!r}")
            merged[key] = type(merged[key])(val)
        self.params = merged
        for label in self.ensembles:
            self.ensemble(label, 2)  # validate descriptors early

    def ensemble(self, label: str, N: int) -> EnsembleSpec:
        try:
            desc = self.ensembles[label]
        except KeyError:
            raise ConfigError(f"no ensemble labelled {label!r}") from None
        try:
            if desc.strip() == "goe":
                off, diag = Gaussian(1.0), Gaussian(2.0)
            else:
                off = parse_distribution(desc)
                diag = off
            if label in self.diagonals:
                diag = parse_distribution(self.diagonals[label])
        except ValueError as exc:
            raise ConfigError(f"ensemble {label!r}: {exc}") from None
        return EnsembleSpec(N, off, diag, self.seed, label)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["experiment"] = {
            "kind": self.kind,
            "trials": str(self.trials),
            "sizes": ", ".join(str(n) for n in self.sizes),
            "seed": str(self.seed),
            "threads": str(self.threads),
            "out": self.out,
            "force": "true" if self.force else "false",
        }
        cp["ensembles"] = dict(self.ensembles)
        cp["diagonals"] = dict(self.diagonals)
        cp[self.kind] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
            ex = cp["experiment"]
            kind = ex["kind"].strip()
            kw = dict(
                kind=kind,
                trials=int(ex.get("trials", 2000)),
                sizes=tuple(int(v) for v in ex.get("sizes", "100, 200, 400, 500, 1000").split(",") if v.strip()),
                seed=int(ex.get("seed", 0)),
                threads=int(ex.get("threads", 1)),
                out=ex.get("out", "results"),
                force=ex.getboolean("force", False),
            )
        except (configparser.Error, KeyError, ValueError) as exc:
            raise ConfigError(f"bad configuration: {exc}") from None
        kw["ensembles"] = dict(cp["ensembles"]) if cp.has_section("ensembles") else {}
        kw["diagonals"] = dict(cp["diagonals"]) if cp.has_section("diagonals") else {}
        kw["params"] = dict(cp[kind]) if cp.has_section(kind) else {}
        return cls(**kw)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini())
        return path

    def override(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        valid = {f.name for f in fields(self)}
        unknown = set(changes) - valid
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        return replace(self, **changes)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_ini(text)


def default_config(kind: str) -> ExperimentConfig:
    """Desk-scale defaults mirroring the acceptance settings for each kind."""
    if kind == "edge-dist":
        return ExperimentConfig(
            kind,
            ensembles={
                "goe": "goe",
                "rademacher": "rademacher",
                "pareto45": "pareto_sym(alpha=4.5)",
                "four_moment": "bounded_four_moment(A=0.5,B=5.0)",
                "marginal_log": "marginal_log",
            },
            trials=2000,
            sizes=(500,),
        )
    if kind == "necessity":
        return ExperimentConfig(
            kind, ensembles={"pareto4": "pareto_sym(alpha=4.0)", "goe": "goe"}, trials=2000, sizes=(100, 200, 400)
        )
    if kind == "rigidity":
        return ExperimentConfig(kind, ensembles={"goe": "goe"}, trials=100, sizes=(1000,))
    if kind == "delocalization":
        return ExperimentConfig(kind, ensembles={"goe": "goe"}, trials=100, sizes=(500,))
    if kind == "tracking":
        return ExperimentConfig(kind, ensembles={"pareto45": "pareto_sym(alpha=4.5)"}, trials=200, sizes=(400,))
    if kind == "decompose-demo":
        return ExperimentConfig(kind, ensembles={"pareto45": "pareto_sym(alpha=4.5)"}, trials=1, sizes=(400,))
    if kind == "tw-table":
        return ExperimentConfig(kind, trials=1, sizes=(2,))
    raise ConfigError(f"unknown experiment kind {kind!r}")
