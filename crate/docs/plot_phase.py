"""Plot the output of `cantor phase --out phase.csv`.

usage: python plot_phase.py phase.csv [figure.png]

Reads phase.csv and its companion phase.contours.csv.
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

COLORS = {
    "Empty": "#f0f0f0",
    "NoIntervalDim": "#c6dbef",
    "NoIntervalC": "#6baed6",
    "PalisFails": "#fd8d3c",
    "IntervalC": "#74c476",
    "Boundary": "#000000",
}


def main(path, out=None):
    path = Path(path)
    grid = pd.read_csv(path, comment="#")
    contours = pd.read_csv(path.with_name(path.stem + ".contours.csv"), comment="#")

    fig, ax = plt.subplots(figsize=(6, 6))
    for region, rows in grid.groupby("region"):
        ax.scatter(rows.p0, rows.p1, s=2, marker="s", color=COLORS.get(region, "grey"), label=region)
    for curve, rows in contours.groupby("curve"):
        ax.plot(rows.p0, rows.p1, lw=1, label=curve)
    ax.set_xlabel("p0")
    ax.set_ylabel("p1")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.legend(loc="lower left", fontsize="small", markerscale=4)
    if out:
        fig.savefig(out, dpi=150, bbox_inches="tight")
    else:
        plt.show()


if __name__ == "__main__":
    main(*sys.argv[1:3])
