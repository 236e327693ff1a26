"""PNG rendering of experiment tables (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "toy": ("radius", ("robust_cvar",), "radius r", "robust CVaR", False),
    "compare": ("size", ("polynomial", "kl"), "sample size", "robust CVaR", True),
    "hedging": ("n", ("nominal_cvar", "robust_cvar"), "hedging frequency n", "CVaR of |error|",
                False),
    "newsvendor": ("radius", ("y_robust",), "radius r", "optimal order y", False),
}


def plot_table(table, path, kind, title=None):
    """Line plot of the experiment's y-columns against its x-column."""
    xcol, ycols, xlabel, ylabel, logy = _STYLE[kind]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    x = table.column(xcol)
    for col in ycols:
        ax.plot(x, table.column(col), marker="o", ms=3.5, label=col.replace("_", " "))
    if kind == "toy" and "exact" in table.meta:
        ax.axhline(table.meta["exact"], color="0.4", ls="--", lw=1, label="exact")
    if kind == "hedging":
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-stable
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
