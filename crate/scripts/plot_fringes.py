#!/usr/bin/env python3
"""Plot one or more fringe CSVs produced by `cpskit cat-fringes`.

Each file becomes one curve (labelled by its filename) with a ±1 standard
error band where the file carries Monte Carlo error estimates.  Noise-free
files also carry a closed-form column, drawn dashed for comparison.

Usage: plot_fringes.py fringes.csv [more.csv ...] [-o fringes.png]
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", nargs="+", help="fringe CSVs from `cpskit cat-fringes`")
    parser.add_argument("-o", "--output", default="fringes.png", help="output image path")
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for path in args.csv:
        data = np.loadtxt(path, delimiter=",", comments="#")
        p, density, stderr = data[:, 0], data[:, 1], data[:, 2]
        label = pathlib.Path(path).stem
        (line,) = ax.plot(p, density, lw=1.2, label=label)
        if np.any(stderr > 0):
            ax.fill_between(
                p,
                density - stderr,
                density + stderr,
                color=line.get_color(),
                alpha=0.25,
                lw=0,
            )
        if data.shape[1] > 3:
            ax.plot(p, data[:, 3], "--", color=line.get_color(), lw=0.8, alpha=0.7)

    ax.set_xlabel("p")
    ax.set_ylabel("P(p)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
