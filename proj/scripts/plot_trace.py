#!/usr/bin/env python3
"""Plot a trace.csv written by `dcmwalk run`."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("trace", help="trace.csv")
    ap.add_argument("-o", "--out", default="trace.png")
    args = ap.parse_args()

    df = pd.read_csv(args.trace)
    fig, axes = plt.subplots(3, 2, figsize=(12, 9), sharex=True)
    for col, axis in enumerate("xy"):
        ax = axes[0, col]
        ax.plot(df.t, df[f"dcm_ref_{axis}"], label="DCM ref")
        ax.plot(df.t, df[f"dcm_{axis}"], label="DCM")
        ax.plot(df.t, df[f"zmp_{axis}"], label="ZMP", alpha=0.6)
        ax.set_ylabel(f"{axis} [m]")
        ax.legend(loc="upper left", fontsize="small")

        ax = axes[1, col]
        ax.plot(df.t, df[f"com_ref_{axis}"], label="CoM ref")
        ax.plot(df.t, df[f"com_{axis}"], label="CoM")
        ax.set_ylabel(f"{axis} [m]")
        ax.legend(loc="upper left", fontsize="small")

    for col, foot in enumerate(("left", "right")):
        ax = axes[2, col]
        for axis in "xz":
            ax.plot(df.t, df[f"{foot}_{axis}"] - df[f"{foot}_ref_{axis}"], label=f"{foot} {axis} error")
        ax.set_ylabel("[m]")
        ax.set_xlabel("t [s]")
        ax.legend(loc="upper left", fontsize="small")

    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
