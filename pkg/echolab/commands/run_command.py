"""
Run Command
echo-lab run <scenario> [--jobs N] [--deterministic] [--out DIR]
"""
import argparse
import logging
from pathlib import Path

from echolab import __version__
from echolab.commands.arguments import positive_int
from echolab.config import settings
from echolab.experiment_service import experiment_service
from echolab.plot_service import PlotKind, plot_service
from echolab.scenario_loader import load_scenario, resolved_config
from echolab.scenario_schemas import ExperimentKind
from echolab.table_writer import write_table

logger = logging.getLogger(__name__)

# Default figure per experiment when [output] plot = true
PLOT_KINDS = {
    ExperimentKind.FIDELITY: PlotKind.FIDELITY,
    ExperimentKind.REVIVAL: PlotKind.RHO,
    ExperimentKind.CONVERGENCE: PlotKind.CONVERGENCE,
}


def register(subparsers):
    parser = subparsers.add_parser("run", help="Run a scenario file and write its table")
    parser.add_argument("scenario", help="Path to the TOML scenario")
    parser.add_argument("--jobs", type=positive_int, default=1, help="Concurrent sweep items (default 1)")
    parser.add_argument("--deterministic", action="store_true", help="Run sweep items serially in fixed order")
    parser.add_argument("--out", default=None, help="Output directory (overrides [output] directory)")
    parser.set_defaults(func=handle)


def handle(args: argparse.Namespace) -> int:
    """Run the scenario; the table is written even when the run fails part-way"""
    scenario = load_scenario(args.scenario)
    result = experiment_service.run(scenario, jobs=args.jobs, deterministic=args.deterministic)

    directory = Path(args.out or scenario.output.directory or settings.OUTPUT_DIR)
    table = result.table
    table.manifest = {
        "tool": "echo-lab",
        "version": __version__,
        "seed": scenario.seed,
        "config": resolved_config(scenario),
        "status": result.status,
        "summary": result.summary,
        "failures": result.failures,
    }
    path = write_table(directory / (scenario.output.table or f"{scenario.name}.csv"), table)

    if result.exit_code:
        logger.error(f"❌ Partial results marked '{result.status}' in {path}")
        return result.exit_code

    kind = PLOT_KINDS.get(scenario.experiment)
    if scenario.output.plot and kind is not None:
        plot_service.emit_plot(path, kind)
    logger.info(f"✓ Scenario '{scenario.name}' complete")
    return 0
