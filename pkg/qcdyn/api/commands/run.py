import argparse
import logging

from qcdyn.services.simulation_service import SimulationService
from qcdyn.utils.csv_io import format_value
from qcdyn.utils.scenario_parser import load_scenario

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run a scenario and write its CSV (and snapshots, plot)")
    parser.add_argument("scenario", help="Scenario file")
    parser.set_defaults(handler=handle_run)


def execute(scenario) -> int:
    service = SimulationService(scenario)
    result = service.run()
    final = dict(zip(result.table.columns, result.table.rows[-1]))
    print(f"scenario {service.hash} ({service.method.value}): {len(result.table.rows)} rows -> {result.csv_path}")
    for name, value in final.items():
        print(f"  {name} = {format_value(value)}")
    for path in result.snapshot_paths:
        print(f"  snapshot {path}")
    if result.plot_path is not None:
        print(f"  plot {result.plot_path}")
    return 0


def handle_run(args: argparse.Namespace) -> int:
    return execute(load_scenario(args.scenario))
