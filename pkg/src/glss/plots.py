"""Report figures, rendered headlessly.

Every figure is written twice: an SVG for eyes and the underlying numbers
as CSV for scripts.  Rendering is deterministic (fixed hash salt, no date
metadata) so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "glss"

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, base: str) -> str:
    path = f"{base}.svg"
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def save_depth_curve(depths, variances, base: str,
                     title: str = "residual variance vs regressor depth") -> list[str]:
    """Semi-log residual-variance curve over nested regressor depths."""
    csv_path = f"{base}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "residual_variance"])
        for d, v in zip(depths, variances):
            writer.writerow([d, f"{v:.17g}"])
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.semilogy(list(depths), list(variances), marker="o", color="tab:blue")
    ax.set_xlabel("depth")
    ax.set_ylabel("residual variance")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return [_finish(fig, base), csv_path]


def save_singular_values(report, base: str) -> list[str]:
    """Observability/reachability spectra with the rank cut-off line."""
    csv_path = f"{base}.csv"
    osv = report.observability_singular_values
    rsv = report.reachability_singular_values
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "observability", "reachability"])
        for i in range(max(len(osv), len(rsv))):
            writer.writerow([
                i + 1,
                f"{osv[i]:.17g}" if i < len(osv) else "",
                f"{rsv[i]:.17g}" if i < len(rsv) else "",
            ])
    fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.2), sharey=True)
    for ax, sv, label in ((axes[0], osv, "observability"),
                          (axes[1], rsv, "reachability")):
        idx = range(1, len(sv) + 1)
        ax.semilogy(list(idx), list(sv), marker="o", linestyle="",
                    color="tab:blue")
        if len(sv) and sv[0] > 0:
            ax.axhline(report.tolerance * sv[0], color="tab:red",
                       linestyle="--", linewidth=1.0)
        ax.set_title(label)
        ax.set_xlabel("index")
        ax.grid(True, which="both", alpha=0.3)
    axes[0].set_ylabel("singular value")
    return [_finish(fig, base), csv_path]
