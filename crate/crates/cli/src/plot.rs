/// Generic matplotlib script for the CSVs written next to it. It renders
/// each response grid as line plots (few delay pairs) or a dB image, and
/// each per-delay table as a stem plot of `g` and `a`.
pub const SCRIPT: &str = r##"#!/usr/bin/env python3
import csv
import glob
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(sys.argv[0]))


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def db(v):
    return 10 * math.log10(max(v, 1e-12))


def response(path):
    data = rows(path)
    col = "value" if "value" in data[0] else "mc_mean"
    pairs = {}
    for r in data:
        pairs.setdefault((int(r["k"]), int(r["l"])), []).append((int(r["nu"]), float(r[col])))
    fig, ax = plt.subplots(figsize=(9, 5))
    if len(pairs) <= 8:
        for (k, l), pts in sorted(pairs.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [db(p[1]) for p in pts], label=f"k={k}, l={l}")
        ax.set_xlabel("Doppler bin nu")
        ax.set_ylabel("E|r|^2 [dB]")
        ax.legend()
    else:
        keys = sorted(pairs)
        nus = sorted({nu for pts in pairs.values() for nu, _ in pts})
        index = {nu: i for i, nu in enumerate(nus)}
        image = [[float("nan")] * len(nus) for _ in keys]
        for row, key in enumerate(keys):
            for nu, v in pairs[key]:
                image[row][index[nu]] = db(v)
        im = ax.imshow(image, aspect="auto", origin="lower", interpolation="nearest")
        ax.set_xlabel("Doppler bin index")
        ax.set_ylabel("(k, l) pair index")
        fig.colorbar(im, ax=ax, label="dB")
    ax.set_title(os.path.basename(path))
    fig.tight_layout()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)


def per_k(path):
    data = rows(path)
    k = [int(r["k"]) for r in data]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    top.stem(k, [float(r["g"]) for r in data])
    top.set_ylabel("g")
    bottom.stem(k, [int(r["a"]) for r in data])
    bottom.set_ylabel("a[k]")
    bottom.set_xlabel("delay k")
    top.set_title(os.path.basename(path))
    fig.tight_layout()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)


for path in sorted(glob.glob(os.path.join(here, "response_*.csv"))):
    response(path)
for path in sorted(glob.glob(os.path.join(here, "*.per_k.csv"))):
    per_k(path)
"##;
