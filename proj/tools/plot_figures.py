#!/usr/bin/env python3
"""Render the five reference figures from the CSV datasets that
`coalbg figure <id> --out DIR` writes.  The CSVs are the contract; this
script only draws them.

Usage:
    coalbg figure fig1 --out out/  (… fig2 … fig5)
    python3 tools/plot_figures.py --dir out/ [--figs fig1,fig4] [--fmt png]
"""

import argparse
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path):
    """Return {column: [floats]}, with 'NA' read as None."""
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    out = {}
    for key in rows[0]:
        column = []
        for row in rows:
            cell = row[key]
            column.append(None if cell == "NA" else float(cell))
        out[key] = column
    return out


def series(data, x, y):
    """(xs, ys) with None-valued entries dropped."""
    pairs = [(a, b) for a, b in zip(data[x], data[y]) if b is not None]
    return [p[0] for p in pairs], [p[1] for p in pairs]


COLORS = {"PP": "tab:blue", "PQ": "tab:red", "QQ": "tab:green"}


def plot_identity_curves(ax, data, prefix="f"):
    for cfg in ("PP", "PQ", "QQ"):
        xs, ys = series(data, "p", f"{prefix}_{cfg}")
        ax.plot(xs, ys, color=COLORS[cfg], label=f"{prefix}_{cfg}")
    ax.set_xlabel("selected-allele frequency p")


def fig1(dir_path, fmt):
    ode = read_csv(dir_path / "fig1_ode_identity.csv")
    wf = read_csv(dir_path / "fig1_wf_identity.csv")
    density = read_csv(dir_path / "fig1_density.csv")
    fig, (ax, axd) = plt.subplots(
        2, 1, figsize=(7, 7), sharex=True,
        gridspec_kw={"height_ratios": [3, 1]})
    plot_identity_curves(ax, ode)
    for cfg in ("PP", "PQ", "QQ"):
        xs, ys = series(wf, "p", f"f_{cfg}")
        ax.plot(xs, ys, "o", ms=3, mfc="none", color=COLORS[cfg],
                label=f"exact chain f_{cfg}")
    ax.set_ylabel("identity in state")
    ax.set_title("Continuum solve (lines) vs exact finite-N chain (circles)")
    ax.legend(fontsize=8, ncol=2)
    axd.plot(density["p"], density["value"], color="0.3")
    axd.set_ylabel("stationary density")
    axd.set_xlabel("selected-allele frequency p")
    fig.tight_layout()
    fig.savefig(dir_path / f"fig1.{fmt}", dpi=150)
    plt.close(fig)


def fig_identity(dir_path, fig_id, fmt):
    data = read_csv(dir_path / f"{fig_id}_identity.csv")
    density = read_csv(dir_path / f"{fig_id}_density.csv")
    fig, (ax, axd) = plt.subplots(
        2, 1, figsize=(7, 7), sharex=True,
        gridspec_kw={"height_ratios": [3, 1]})
    plot_identity_curves(ax, data)
    ax.plot(data["p"], data["fbar"], "k--", label="fbar")
    ax.set_ylabel("identity in state")
    ax.set_title(f"{fig_id}: identity in state by sample configuration")
    ax.legend(fontsize=8)
    axd.plot(density["p"], density["value"], color="0.3")
    axd.set_ylabel("stationary density")
    fig.tight_layout()
    fig.savefig(dir_path / f"{fig_id}.{fmt}", dpi=150)
    plt.close(fig)


def fig_sweep(dir_path, fig_id, fmt):
    data = read_csv(dir_path / f"{fig_id}_sweep.csv")
    column = "avg_fbar" if fig_id == "fig4" else "Tbar_scaled"
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(data["s0"], data[column], "o-", color="tab:blue", label=column)
    ax.set_xscale("symlog", linthresh=0.16)
    ax.set_xlabel("balancing strength s0")
    ax.set_ylabel(column)
    if fig_id == "fig4":
        ax.axhline(5 / 11, color="tab:gray", ls="--",
                   label="pinned-frequency baseline 5/11")
        ax.axhline(0.43, color="tab:gray", ls=":",
                   label="documented reference 0.43")
        ax.axhline(1 / 1.4, color="tab:green", ls=":", lw=1,
                   label="neutral level 1/1.4")
    else:
        with open(dir_path / "fig5_baselines.csv", newline="") as handle:
            bases = {row["convention"]: float(row["tbar_scaled"])
                     for row in csv.DictReader(handle)}
        solved = bases["solved_constant_p"]
        documented = bases["documented_reference"]
        ax.axhline(solved, color="tab:gray", ls="--",
                   label=f"pinned-frequency baseline {solved:g}")
        ax.axhline(documented, color="tab:gray", ls=":",
                   label=f"documented reference {documented:g}")
        ax.axhline(1.0, color="tab:green", ls=":", lw=1,
                   label="neutral level 1")
    ax.set_title(f"{fig_id}: stationarity-averaged sweep")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(dir_path / f"{fig_id}.{fmt}", dpi=150)
    plt.close(fig)


RENDERERS = {
    "fig1": fig1,
    "fig2": lambda d, f: fig_identity(d, "fig2", f),
    "fig3": lambda d, f: fig_identity(d, "fig3", f),
    "fig4": lambda d, f: fig_sweep(d, "fig4", f),
    "fig5": lambda d, f: fig_sweep(d, "fig5", f),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", required=True,
                        help="directory holding the figure CSVs")
    parser.add_argument("--figs", default="",
                        help="comma list (default: every figure whose CSVs "
                             "are present)")
    parser.add_argument("--fmt", default="png", choices=["png", "svg", "pdf"])
    args = parser.parse_args()

    dir_path = pathlib.Path(args.dir)
    wanted = args.figs.split(",") if args.figs else list(RENDERERS)
    rendered = []
    for fig_id in wanted:
        if fig_id not in RENDERERS:
            sys.exit(f"unknown figure id: {fig_id}")
        probe = "fig1_ode_identity" if fig_id == "fig1" else (
            f"{fig_id}_sweep" if fig_id in ("fig4", "fig5")
            else f"{fig_id}_identity")
        if not (dir_path / f"{probe}.csv").exists():
            if args.figs:
                sys.exit(f"{fig_id}: no {probe}.csv in {dir_path} "
                         f"(run: coalbg figure {fig_id} --out {dir_path})")
            continue
        RENDERERS[fig_id](dir_path, args.fmt)
        rendered.append(fig_id)
        print(f"rendered {dir_path / (fig_id + '.' + args.fmt)}")
    if not rendered:
        sys.exit(f"no figure CSVs found in {dir_path}")


if __name__ == "__main__":
    main()
