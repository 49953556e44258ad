"""
Plot Command
echo-lab plot <table> --kind {rho,fidelity,convergence} [--out FILE]
"""
import argparse

from echolab.plot_service import PlotKind, plot_service


def register(subparsers):
    parser = subparsers.add_parser("plot", help="Render a written table as an SVG figure")
    parser.add_argument("table", help="Path to a CSV table written by 'run'")
    parser.add_argument("--kind", required=True, choices=[k.value for k in PlotKind])
    parser.add_argument("--out", default=None, help="SVG destination (default: next to the table)")
    parser.set_defaults(func=handle)


def handle(args: argparse.Namespace) -> int:
    plot_service.emit_plot(args.table, PlotKind(args.kind), args.out)
    return 0
