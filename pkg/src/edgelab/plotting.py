"""Optional PNG figures for experiment reports (``--figures``)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _edge(rep, out, plt):
    from .tracywidom import tw_cdf, tw_table

    table = tw_table()
    s = table.s_grid[(table.s_grid >= -6) & (table.s_grid <= 4)]
    fig, ax = plt.subplots(figsize=(6, 4))
    for (label, N), x in rep.extras.get("samples", {}).items():
        xs = np.sort(x)
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post", lw=1, label=f"{label}, N={N}")
    ax.plot(s, tw_cdf(1, s, table), "k--", lw=1.5, label="F1")
    ax.set_xlabel(r"$N^{2/3}(\lambda_N - 2)$")
    ax.set_ylabel("CDF")
    ax.legend(fontsize=7)
    path = out / "edge.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]


def _tw(rep, out, plt):
    table = rep.extras["table"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(table.s_grid, table.F1, label="F1")
    ax.plot(table.s_grid, table.F2, label="F2")
    ax.set_xlabel("s")
    ax.legend()
    path = out / "tw.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]


def _histograms(rep, out, plt, column):
    columns, rows = next(iter(rep.tables.values()))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in dict.fromkeys(r["ensemble"] for r in rows):
        vals = [r[column] for r in rows if r["ensemble"] == label]
        ax.hist(vals, bins=40, histtype="step", label=label)
    ax.set_xlabel(column)
    ax.legend(fontsize=7)
    path = out / f"{rep.kind}.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]


_COLUMN = {"necessity": "lambda_max", "rigidity": "rig_max", "delocalization": "deloc", "tracking": "gap"}


def render(rep, out_dir) -> list[Path]:
    """Draw whatever figure suits ``rep.kind``; returns the files written."""
    plt = _pyplot()
    out = Path(out_dir)
    if rep.kind == "edge-dist":
        return _edge(rep, out, plt)
    if rep.kind == "tw-table":
        return _tw(rep, out, plt)
    if rep.kind in _COLUMN:
        return _histograms(rep, out, plt, _COLUMN[rep.kind])
    return []
