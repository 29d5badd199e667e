#!/usr/bin/env python3
"""Plot F, E, S against inverse temperature from a thermals.csv table.

Usage:
    python scripts/plot_thermal_sweep.py runs/sweep/thermals.csv \
        --out thermals.png [--config configs/xy_sweep.ini]

Error bars come from the std-error columns. With --config, exact curves from
dense diagonalization of the configured chain are drawn underneath.
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

QUANTITIES = ("free_energy", "energy", "entropy")


def read_table(path):
    rows = list(csv.reader(Path(path).read_text().splitlines()[1:]))
    header, body = rows[0], rows[1:]
    cols = {name: i for i, name in enumerate(header)}
    table = defaultdict(lambda: defaultdict(dict))
    for row in body:
        beta = float(row[cols["beta"]])
        method = row[cols["method"]]
        for q in QUANTITIES:
            table[method][q][beta] = (
                float(row[cols[q]]),
                float(row[cols[f"{q}_stderr"]]),
            )
    return table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("table", help="thermals.csv from the thermal-sweep command")
    ap.add_argument("--out", default="thermals.png")
    ap.add_argument("--config", default=None,
                    help="experiment config; adds exact reference curves")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    table = read_table(args.table)
    betas = sorted(next(iter(table.values()))["free_energy"])

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    if args.config is not None:
        from thermalvqs.cli import load_config
        from thermalvqs.spinchain import spectral_oracle

        oracle = spectral_oracle(load_config(args.config).chain)
        grid = np.linspace(min(betas) * 0.9, max(betas) * 1.05, 200)
        exact = [[], [], []]
        for b in grid:
            ref = oracle.gibbs(b)
            exact[0].append(ref.free_energy)
            exact[1].append(ref.energy)
            exact[2].append(ref.entropy)
        for ax, ys in zip(axes, exact):
            ax.plot(grid, ys, "k-", lw=1, alpha=0.5, label="exact")

    markers = {"full_space": "o", "sample": "s", "thermal_relation": "^"}
    for method, quantities in table.items():
        for ax, q in zip(axes, QUANTITIES):
            vals = [quantities[q][b][0] for b in betas]
            errs = [quantities[q][b][1] for b in betas]
            ax.errorbar(
                betas, vals, yerr=errs, marker=markers.get(method, "x"),
                ls="none", ms=4, capsize=2, label=method,
            )
    for ax, q in zip(axes, QUANTITIES):
        ax.set_xlabel("beta")
        ax.set_ylabel(q.replace("_", " "))
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
