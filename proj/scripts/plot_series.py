#!/usr/bin/env python3
"""Plot the CSV outputs of the cattplate CLI.

Usage:
    plot_series.py series  <out_dir>/series.csv   [--save fig.png]
    plot_series.py spectrum <out_dir>/spectrum.csv [--save fig.png]
    plot_series.py sweep    <out_dir>/sweep.csv

The core tool never renders; plotting is strictly out-of-process.
"""

import argparse
import csv
import sys


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        sys.exit(f"{path}: no data rows")
    return rows


def plot_series(path, save):
    import matplotlib

    if save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(path)
    t = [float(r["t"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 7))
    for col in ("E1", "E2", "E3", "E"):
        ax1.semilogy(t, [max(float(r[col]), 1e-300) for r in rows], label=col)
    ax1.semilogy(t, [max(float(r["X"]), 1e-300) for r in rows], "k--", label="X")
    ax1.set_ylabel("energy")
    ax1.legend(ncol=3)
    ax1.grid(alpha=0.3)
    ax2.plot(t, [float(r["ellipticity_min"]) for r in rows], label="min N'(z)")
    ax2.axhline(0.0, color="r", lw=0.8)
    ax2.set_xlabel("t")
    ax2.set_ylabel("ellipticity")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    if save:
        fig.savefig(save, dpi=150)
        print(f"wrote {save}")
    else:
        plt.show()


def plot_spectrum(path, save):
    import matplotlib

    if save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(path)
    k = [int(r["k"]) for r in rows]
    absc = [float(r["abscissa"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(k, [-a for a in absc], "o-")
    ax.set_xlabel("mode k")
    ax.set_ylabel("damping  -Re s_max")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    if save:
        fig.savefig(save, dpi=150)
        print(f"wrote {save}")
    else:
        plt.show()


def show_sweep(path):
    rows = read_csv(path)
    print(f"{'gamma':>8} {'tau':>8} {'inf -absc':>12} {'trend':>10}  classification")
    for r in rows:
        print(
            f"{float(r['gamma']):8.3g} {float(r['tau']):8.3g} "
            f"{float(r['inf_neg_abscissa']):12.4e} {float(r['trend_ratio']):10.4f}  "
            f"{r['classification']}"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("kind", choices=["series", "spectrum", "sweep"])
    ap.add_argument("csv_path")
    ap.add_argument("--save", default=None, help="write a PNG instead of showing a window")
    args = ap.parse_args()
    if args.kind == "series":
        plot_series(args.csv_path, args.save)
    elif args.kind == "spectrum":
        plot_spectrum(args.csv_path, args.save)
    else:
        show_sweep(args.csv_path)


if __name__ == "__main__":
    main()
