#!/usr/bin/env python3
"""Plot the CSV output of `boltzmann solve`.

usage: plot.py RUN_DIR [--out DIR]

Writes moments.png (rho, V1, T against x, one curve per output time) and
marginals.png (g(v1) per recorded cell at the last output time).
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def by_time(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[r["t"]].append(r)
    return dict(sorted(groups.items()))


def plot_moments(rows, out, curves):
    groups = by_time(rows)
    times = list(groups)
    step = max(1, len(times) // curves)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for t in times[::step] + ([times[-1]] if (len(times) - 1) % step else []):
        g = groups[t]
        x = [r["x_center"] for r in g]
        for ax, key in zip(axes, ["rho", "V1", "T"]):
            ax.plot(x, [r[key] for r in g], label=f"t={t:.3g}")
    for ax, key in zip(axes, ["density", "bulk velocity V1", "temperature"]):
        ax.set_xlabel("x")
        ax.set_title(key)
    axes[-1].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out)


def plot_marginals(rows, out):
    last = max(r["t"] for r in rows)
    cells = defaultdict(list)
    for r in rows:
        if r["t"] == last:
            cells[int(r["cell_index"])].append((r["v1"], r["g"]))
    fig, ax = plt.subplots(figsize=(6, 5))
    for offset, (cell, pts) in enumerate(sorted(cells.items())):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] + 0.5 * offset for p in pts], marker=".", label=f"cell {cell}")
    ax.set_xlabel("v1")
    ax.set_ylabel("g(v1), offset per cell")
    ax.set_title(f"marginals at t={last:.3g}")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--curves", type=int, default=6, help="moment curves to draw")
    args = parser.parse_args()
    out = args.out or args.run_dir
    out.mkdir(parents=True, exist_ok=True)
    plot_moments(read(args.run_dir / "moments.csv"), out / "moments.png", args.curves)
    marginals = read(args.run_dir / "marginals.csv")
    if marginals:
        plot_marginals(marginals, out / "marginals.png")


if __name__ == "__main__":
    main()
