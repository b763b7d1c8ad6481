"""Command line front end: render tables and plots from study CSVs."""

from __future__ import annotations

import argparse
import sys

from .plots import render_convergence_plot
from .tables import read_study, render_table


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render effectivity tables and convergence plots "
                    "from solver study CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="print a fixed-width study table")
    p_table.add_argument("csv", nargs="+", help="study CSV file(s)")

    p_plot = sub.add_parser("plot", help="write a convergence plot")
    p_plot.add_argument("csv", nargs="+", help="study CSV file(s)")
    p_plot.add_argument("-o", "--out", required=True,
                        help="output image path (png/pdf/svg)")

    args = parser.parse_args(argv)

    if args.command == "table":
        for i, path in enumerate(args.csv):
            if len(args.csv) > 1:
                if i:
                    print()
                print(f"== {path} ==")
            sys.stdout.write(render_table(read_study(path)))
        return 0

    render_convergence_plot(args.csv, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
