import argparse

from qcdyn.services.comparison import compare_series
from qcdyn.utils.csv_io import read_table


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="Compare columns of two run CSVs")
    parser.add_argument("run_a", help="First CSV")
    parser.add_argument("run_b", help="Second CSV")
    parser.add_argument("--columns", nargs="+", required=True, help="Columns to compare")
    parser.add_argument("--tol", type=float, default=None, help="Max absolute discrepancy for a pass")
    parser.add_argument("--interpolate", action="store_true",
                        help="Linearly interpolate the second run onto the first run's times")
    parser.set_defaults(handler=handle_compare)


def handle_compare(args: argparse.Namespace) -> int:
    a = read_table(args.run_a)
    b = read_table(args.run_b)
    report = compare_series(a.times, a.series(), b.times, b.series(), args.columns, args.tol, args.interpolate)
    print(report.model_dump_json(indent=2))
    return report.exit_status
