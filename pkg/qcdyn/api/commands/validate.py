import argparse

from qcdyn.utils.scenario_parser import dump_scenario, load_scenario


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="Check a scenario and print its normalized form")
    parser.add_argument("scenario", help="Scenario file")
    parser.set_defaults(handler=handle_validate)


def handle_validate(args: argparse.Namespace) -> int:
    print(dump_scenario(load_scenario(args.scenario)), end="")
    return 0
