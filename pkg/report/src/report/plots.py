"""Convergence plots from study CSVs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tables import read_study  # noqa: E402


def render_convergence_plot(paths, out, show_estimate=True):
    """Log-log |true error| (and |eta|) against element count.

    Each CSV becomes one series named after its file stem; rows without a
    reference value only contribute to the estimate curve.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for path in paths:
        rows = [r for r in read_study(path) if r.get("status") == "ok"]
        rows.sort(key=lambda r: r["n_elements"])
        label = os.path.splitext(os.path.basename(path))[0]
        ne = [r["n_elements"] for r in rows if r.get("true_error") is not None]
        err = [abs(r["true_error"]) for r in rows
               if r.get("true_error") is not None]
        if ne:
            ax.loglog(ne, err, "o-", label=label)
        if show_estimate:
            ne_eta = [r["n_elements"] for r in rows if r.get("eta") is not None]
            eta = [abs(r["eta"]) for r in rows if r.get("eta") is not None]
            if ne_eta:
                ax.loglog(ne_eta, eta, "s--", alpha=0.6,
                          label=label + " (estimate)")
    ax.set_xlabel("# elements")
    ax.set_ylabel("|QoI error|")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
