#!/usr/bin/env python3
"""Plot an anharmonic trajectory CSV produced by `cpskit anharmonic`.

Top panel: simulated |<a>(t)| against the untruncated closed form.
Bottom panel: the two error columns on a log scale.

Usage: plot_anharmonic.py run.csv [-o run.png]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", help="trajectory CSV from `cpskit anharmonic`")
    parser.add_argument("-o", "--output", default=None, help="output image path")
    args = parser.parse_args()

    data = np.loadtxt(args.csv, delimiter=",", comments="#")
    t = data[:, 0]
    amplitude = np.hypot(data[:, 1], data[:, 2])
    reference = np.hypot(data[:, 4], data[:, 5])
    deviation = data[:, 6]
    dynamical = data[:, 7]

    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=(8, 6), sharex=True, height_ratios=[2, 1]
    )
    top.plot(t, amplitude, label="simulated $|\\langle a\\rangle|$", lw=1.2)
    top.plot(t, reference, "--", label="closed form", lw=1.0)
    top.set_ylabel("$|\\langle a\\rangle|$")
    top.legend(loc="upper right")

    bottom.semilogy(t, np.maximum(deviation, 1e-18), label="amplitude change")
    bottom.semilogy(t, np.maximum(dynamical, 1e-18), label="dynamical deviation")
    bottom.set_xlabel("t")
    bottom.set_ylabel("error")
    bottom.legend(loc="upper right")

    fig.tight_layout()
    output = args.output or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(output, dpi=150)
    print(f"wrote {output}")


if __name__ == "__main__":
    main()
