"""Figure rendering for experiment results.

Matplotlib is imported lazily with the file backend so headless runs and
library users who never plot do not pay for it.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["plot_rows"]

_MARKERS = {"ucs": "o", "pcs": "s", "ocs": "^"}
_STYLES = {
    "analysis": "-",
    "dense": "--",
    "single_slope": ":",
    "montecarlo": "",
}


def plot_rows(rows, stem, sweep_name: str) -> list:
    """Render one PNG per tier next to the CSV and return the paths.

    Lines are drawn per (strategy, engine); the Monte Carlo engine is shown
    as markers with error bars on top of the analytic curves.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem = Path(stem)
    tiers = sorted({row["tier"] for row in rows})
    log_x = sweep_name == "sbs_density"
    written = []
    for tier in tiers:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for strategy in ("ucs", "pcs", "ocs"):
            for engine in ("analysis", "dense", "single_slope", "montecarlo"):
                pts = [
                    r
                    for r in rows
                    if r["tier"] == tier
                    and r["strategy"] == strategy
                    and r["engine"] == engine
                    and r["sdp"] is not None
                    and not math.isnan(r["sdp"])
                ]
                if not pts:
                    continue
                x = [r["sweep_value"] for r in pts]
                y = [r["sdp"] for r in pts]
                label = f"{strategy.upper()} {engine}"
                if engine == "montecarlo":
                    err = [r.get("stderr") or 0.0 for r in pts]
                    ax.errorbar(
                        x,
                        y,
                        yerr=err,
                        fmt=_MARKERS.get(strategy, "x"),
                        mfc="none",
                        capsize=3,
                        linestyle="",
                        label=label,
                    )
                else:
                    ax.plot(
                        x,
                        y,
                        linestyle=_STYLES.get(engine, "-"),
                        marker="",
                        label=label,
                    )
        if log_x:
            ax.set_xscale("log")
        ax.set_xlabel(sweep_name.replace("_", " "))
        ax.set_ylabel("successful download probability")
        ax.set_title(f"{stem.name} ({tier})")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        out = stem.with_name(f"{stem.name}_{tier}.png")
        fig.tight_layout()
        fig.savefig(out, dpi=130)
        plt.close(fig)
        written.append(out)
    return written
