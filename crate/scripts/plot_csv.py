#!/usr/bin/env python3
"""Plot two columns of a qdot CSV table.

    scripts/plot_csv.py out/detuning/detuning.csv omega_rel L_p_rel --logy
    scripts/plot_csv.py out/core_radius/spectrum.csv sweep_param E --group l n_r
    scripts/plot_csv.py out/depth/v0.csv V0 L_p --group A0 --logy
"""

import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("csv")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--group", nargs="*", default=[], help="columns that split the rows into curves")
    p.add_argument("--logx", action="store_true")
    p.add_argument("--logy", action="store_true")
    p.add_argument("--out", help="save to this file instead of showing a window")
    args = p.parse_args()

    df = pd.read_csv(args.csv)
    fig, ax = plt.subplots()
    groups = df.groupby(args.group) if args.group else [("", df)]
    for key, g in groups:
        label = ", ".join(f"{c}={v}" for c, v in zip(args.group, key if isinstance(key, tuple) else (key,)))
        ax.plot(g[args.x], g[args.y], marker=".", label=label or None)
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    if args.logx:
        ax.set_xscale("log")
    if args.logy:
        ax.set_yscale("log")
    if args.group and len(groups) <= 12:
        ax.legend(fontsize="small")
    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
