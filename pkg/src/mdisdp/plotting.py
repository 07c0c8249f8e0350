"""Optional PNG rendering of a sweep; the CSV remains the data contract."""
from __future__ import annotations

import math
from pathlib import Path

_LABELS = {
    "sdp": "SDP bound",
    "coin": "quantum coin",
    "plob": "repeaterless bound",
    "infinite_test": "infinitely many test states",
}


def plot_sweep(scenario, points, path: Path) -> Path:
    """Key rate against the sweep axis on a log scale."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for method in scenario.methods:
        xs, ys = [], []
        for p in points:
            v = p.rates.get(method)
            if v is not None and v > 0 and math.isfinite(v):
                xs.append(p.axis)
                ys.append(v)
        if xs:
            ax.semilogy(xs, ys, marker="o", markersize=3, label=_LABELS[method])
    ax.set_xlabel("distance (km)" if scenario.axis == "distance" else "total loss (dB)")
    ax.set_ylabel("key rate per pulse")
    ax.set_title(scenario.name)
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
