import argparse

from qcdyn.api.commands.run import execute
from qcdyn.core.exceptions import ScenarioValidationError
from qcdyn.services.simulation_service import force_oracle
from qcdyn.utils.scenario_parser import load_scenario


def register(subparsers) -> None:
    parser = subparsers.add_parser("oracle", help="Run a full_qcle_config scenario on the dense exact propagator")
    parser.add_argument("scenario", help="Scenario file")
    parser.set_defaults(handler=handle_oracle)


def handle_oracle(args: argparse.Namespace) -> int:
    scenario = force_oracle(load_scenario(args.scenario))
    problems = scenario.constraint_violations()
    if problems:
        raise ScenarioValidationError(*problems[0])
    return execute(scenario)
