"""Figures written next to the CSV reports.

The CSV files are the contract; these are convenience renderings.
"""

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "rk": ("tab:blue", "o", "--"),
    "gmls": ("tab:orange", "s", "--"),
    "ba_rk": ("tab:green", "^", "-"),
    "ba_gmls": ("tab:red", "v", "-"),
}

LABELS = {"rk": "RK-PD", "gmls": "GMLS-PD", "ba_rk": "BA-RK-PD", "ba_gmls": "BA-GMLS-PD"}


def _slope_marker(ax, h, e, slope, label):
    h0, h1 = h[0], h[-1]
    e0 = e[0] * 0.5
    ax.plot([h0, h1], [e0, e0 * (h1 / h0) ** slope], color="0.5", lw=0.8, ls=":")
    ax.annotate(label, (h1, e0 * (h1 / h0) ** slope), fontsize=7, color="0.4",
                textcoords="offset points", xytext=(-4, -10))


def plot_convergence(report, path, title=None):
    """Log-log RMS error against spacing, one curve per configuration."""
    groups = defaultdict(list)
    for r in report.rows:
        if r.status == "ok" and math.isfinite(r.rms) and r.rms > 0:
            groups[(r.case, r.formulation, r.order, r.grid, r.delta)].append(r)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ref = None
    for (case, form, order, grid, delta), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r.level)
        h = np.array([r.h for r in rows])
        e = np.array([r.rms for r in rows])
        color, marker, ls = STYLE.get(form, ("k", "x", "-"))
        ax.loglog(h, e, marker=marker, ls=ls, color=color, ms=4,
                  label=f"{LABELS.get(form, form)} n={order} $\\delta$={delta:g}")
        if ref is None and h.size > 1:
            ref = (h, e)
    if ref is not None:
        _slope_marker(ax, *ref, 1.0, "1")
        _slope_marker(ax, *ref, 2.0, "2")
    ax.set_xlabel("average spacing h")
    ax.set_ylabel("RMS displacement error")
    if title:
        ax.set_title(title, fontsize=9)
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    ax.legend(fontsize=6, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_field(cloud, values, path, title=None, mask=None):
    """Scatter of a nodal scalar over the reference positions."""
    if mask is None:
        mask = cloud.role == 0
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    sc = ax.scatter(cloud.X[mask, 0], cloud.X[mask, 1], c=np.asarray(values)[mask],
                    s=max(2.0, 4000.0 / max(mask.sum(), 1)), cmap="viridis", marker="s",
                    linewidths=0)
    fig.colorbar(sc, ax=ax, shrink=0.85)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
