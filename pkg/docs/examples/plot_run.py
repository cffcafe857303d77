"""Plot the CSV output of ``spikepgd run`` for a 2-D instance.

Usage::

    spikepgd gen --k 5 --eps 0.1 --m 120 --out inst.json
    spikepgd run inst.json --out run_out
    python docs/examples/plot_run.py inst.json run_out figure.png

Left panel: modulus of the grid back-projection with the initial spikes.
Right panel: spike trajectories over the iterations with the ground truth.
Not part of the tested package surface; needs matplotlib.
"""

import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def main(instance, run_dir, out):
    run_dir = Path(run_dir)
    truth = np.asarray(json.loads(Path(instance).read_text())["spikes"]["positions"])
    bp = read_csv(run_dir / "backprojection.csv")
    init = read_csv(run_dir / "init.csv")
    traj = read_csv(run_dir / "trajectory.csv")

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.5))
    sc = ax0.scatter([float(r["t1"]) for r in bp], [float(r["t2"]) for r in bp],
                     c=[float(r["modulus"]) for r in bp], s=12, marker="s", cmap="viridis")
    fig.colorbar(sc, ax=ax0, label="|z|")
    ax0.scatter([float(r["t1"]) for r in init], [float(r["t2"]) for r in init],
                facecolors="none", edgecolors="w", s=30, label="init")
    ax0.set_title("back-projection")
    ax0.legend(loc="lower right")

    # Spike indices are reassigned after merges, so draw snapshots as points.
    by_iter = defaultdict(list)
    for r in traj:
        by_iter[int(r["iter"])].append((float(r["t1"]), float(r["t2"])))
    iters = sorted(by_iter)
    cmap = plt.get_cmap("plasma")
    for it in iters:
        pts = np.array(by_iter[it])
        ax1.scatter(pts[:, 0], pts[:, 1], s=2, color=cmap(it / max(1, iters[-1])))
    ax1.scatter(truth[:, 0], truth[:, 1], marker="x", color="k", s=40, label="truth")
    ax1.set_title(f"trajectories ({len(iters)} iterations)")
    ax1.legend(loc="lower right")
    for ax in (ax0, ax1):
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:4])
