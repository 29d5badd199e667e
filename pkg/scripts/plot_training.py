#!/usr/bin/env python3
"""Plot loss curves from one or more trace.csv files.

Usage:
    python scripts/plot_training.py runs/out/trace.csv [more.csv ...] \
        --out loss.png [--f-exact -8.979]

Reads the versioned CSV emitted by the train command. When the run tracked
full-space values, both the sampled and the exact loss are drawn; passing
--f-exact adds a horizontal reference line.
"""

import argparse
import csv
from pathlib import Path


def read_trace(path):
    rows = list(csv.reader(Path(path).read_text().splitlines()[1:]))
    header, body = rows[0], rows[1:]
    cols = {name: i for i, name in enumerate(header)}

    def column(name):
        vals = [row[cols[name]] for row in body]
        return [float(v) if v else None for v in vals]

    return {
        "iter": [int(row[cols["iter"]]) for row in body],
        "loss_sample": column("loss_sample"),
        "loss_fullspace": column("loss_fullspace"),
        "reward_variance": column("reward_variance"),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("traces", nargs="+", help="trace.csv files")
    ap.add_argument("--out", default="training.png")
    ap.add_argument("--f-exact", type=float, default=None)
    ap.add_argument("--log-variance", action="store_true",
                    help="add a second panel with the reward variance")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n_panels = 2 if args.log_variance else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(6 * n_panels, 4), squeeze=False)
    ax = axes[0][0]
    for path in args.traces:
        tr = read_trace(path)
        label = Path(path).parent.name or path
        ax.plot(tr["iter"], tr["loss_sample"], alpha=0.6, label=f"{label} (sampled)")
        if any(v is not None for v in tr["loss_fullspace"]):
            ax.plot(tr["iter"], tr["loss_fullspace"], label=f"{label} (full space)")
    if args.f_exact is not None:
        ax.axhline(args.f_exact, color="k", ls="--", lw=1, label="exact F")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)

    if args.log_variance:
        ax2 = axes[0][1]
        for path in args.traces:
            tr = read_trace(path)
            ax2.semilogy(tr["iter"], tr["reward_variance"], label=Path(path).parent.name)
        ax2.set_xlabel("iteration")
        ax2.set_ylabel("reward variance")
        ax2.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
