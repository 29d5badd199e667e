#!/usr/bin/env python3
"""Plot a scaling campaign: layer contour or cost-versus-size power law.

Usage:
    python scripts/plot_scaling.py runs/scale/fit.json --out scaling.png

The fit.json written by the scaling command carries everything needed; the
kind field selects the plot. Cost campaigns get a log-log panel with the
fitted power law, layer contours a straight plot of minimum depth.
"""

import argparse
import json
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("fit", help="fit.json from the scaling command")
    ap.add_argument("--out", default="scaling.png")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    fit = json.loads(Path(args.fit).read_text())
    fig, ax = plt.subplots(figsize=(5, 4))
    n = np.array(fit["n"], dtype=float)

    if fit["kind"] == "layers":
        d = np.array(fit["min_layers"], dtype=float)
        ax.plot(n, d, "o-", label="minimum depth")
        if "slope" in fit:
            ax.plot(
                n, fit["slope"] * n + fit["intercept"], "k--", lw=1,
                label=f"linear fit, slope {fit['slope']:.2f}",
            )
        ax.set_xlabel("chain length")
        ax.set_ylabel(f"layers to eps <= {fit['target_epsilon']:g}")
    else:
        cost = np.array(fit["mean_cost"], dtype=float)
        ax.loglog(n, cost, "o", label="mean cost")
        if "exponent" in fit:
            ax.loglog(
                n, np.exp(fit["log_intercept"]) * n ** fit["exponent"], "k--", lw=1,
                label=f"power law, exponent {fit['exponent']:.2f}",
            )
        ax.set_xlabel("chain length")
        ax.set_ylabel("circuit evaluations to target")
    ax.legend(fontsize=8)
    ax.set_title(fit["kind"])
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
