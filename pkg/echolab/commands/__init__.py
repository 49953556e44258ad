# Command-line sub-commands
from . import check_command, plot_command, run_command

__all__ = [
    "run_command",
    "plot_command",
    "check_command",
]
