import argparse

from src.services import experiments as experiments_service
from src.util.cli import CommandRouter
from src.util.config_dependency import get_config
from src.util.reports import write_report

router = CommandRouter("sweep", help="Empirical minimax risk and theory along eps = n^alpha")

SWEEP_COLUMNS = [
    "problem",
    "alpha",
    "eps",
    "shift_class",
    "minimax_empirical",
    "se",
    "log_n_risk",
    "theory_exact",
    "theory_lower",
    "theory_upper",
    "rate_only",
]


@router.command
def sweep(args: argparse.Namespace) -> int:
    """One row per (alpha, shift class); identical output for identical config and seed."""
    config = get_config(args)
    rows = experiments_service.sweep_rows(config)
    write_report(rows, SWEEP_COLUMNS, config.output_format, config.output_path)
    return 0
