import argparse
from pathlib import Path

from qcdyn.utils.csv_io import read_table
from qcdyn.utils.plotting import emit_plot


def register(subparsers) -> None:
    parser = subparsers.add_parser("plot", help="Write an SVG line plot of CSV columns")
    parser.add_argument("csv", help="Run CSV")
    parser.add_argument("--columns", nargs="+", required=True, help="Columns to plot")
    parser.add_argument("--output", default=None, help="SVG path (default: next to the CSV)")
    parser.add_argument("--title", default=None)
    parser.set_defaults(handler=handle_plot)


def handle_plot(args: argparse.Namespace) -> int:
    table = read_table(args.csv)
    output = Path(args.output) if args.output else Path(args.csv).with_suffix(".svg")
    print(emit_plot(table, args.columns, output, args.title))
    return 0
